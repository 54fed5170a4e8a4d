"""Netpbm (PPM/PGM) decoding and encoding.

These are the interchange formats of the pipeline: P5/P6 binary rasters are
emitted in canonical form (single-space header fields, maxval 255) so that
encode(decode(f)) round-trips canonical files byte for byte. P2/P3 ASCII
variants are accepted on input.
"""

from __future__ import annotations

import os

import numpy as np

from .imaging import BinaryImage, GrayImage, RgbImage

_WHITESPACE = b" \t\n\r\x0b\x0c"


class NetpbmError(Exception):
    """Base class for decode failures."""


class MissingFileError(NetpbmError):
    pass


class MalformedHeaderError(NetpbmError):
    pass


class TruncatedPayloadError(NetpbmError):
    pass


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        ch = buf[pos]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == ord("#"):
            while pos < n and buf[pos] != ord("\n"):
                pos += 1
        else:
            break
    if pos >= n:
        raise MalformedHeaderError("unexpected end of header")
    start = pos
    while pos < n and buf[pos] not in _WHITESPACE:
        pos += 1
    return buf[start:pos], pos


def _header_int(buf: bytes, pos: int, what: str) -> tuple[int, int]:
    token, pos = _next_token(buf, pos)
    try:
        value = int(token)
    except ValueError:
        raise MalformedHeaderError(f"non-numeric {what}: {token!r}") from None
    return value, pos


def _ascii_samples(buf: bytes, pos: int, count: int, maxval: int) -> np.ndarray:
    tokens = buf[pos:].split()
    if len(tokens) < count:
        raise TruncatedPayloadError(f"expected {count} samples, found {len(tokens)}")
    try:
        values = np.array([int(t) for t in tokens[:count]], dtype=np.int64)
    except ValueError:
        raise MalformedHeaderError("non-numeric raster sample") from None
    if values.min() < 0 or values.max() > maxval:
        raise MalformedHeaderError("sample out of range")
    return values


def decode(data: bytes) -> RgbImage:
    """Decode PPM (P3/P6) or PGM (P2/P5) bytes; gray promotes to r=g=b."""
    magic, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise MalformedHeaderError(f"unsupported magic {magic!r}")
    w, pos = _header_int(data, pos, "width")
    h, pos = _header_int(data, pos, "height")
    if w < 1 or h < 1:
        raise MalformedHeaderError("dimensions must be positive")
    maxval, pos = _header_int(data, pos, "maxval")
    if not 1 <= maxval <= 255:
        raise MalformedHeaderError(f"unsupported maxval {maxval}")

    channels = 3 if magic in (b"P3", b"P6") else 1
    count = w * h * channels
    if magic in (b"P5", b"P6"):
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise MalformedHeaderError("missing whitespace before raster")
        pos += 1
        raster = data[pos : pos + count]
        if len(raster) < count:
            raise TruncatedPayloadError(f"raster needs {count} bytes, found {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
        if maxval != 255 and values.max() > maxval:
            raise MalformedHeaderError("sample out of range")
    else:
        values = _ascii_samples(data, pos, count, maxval)

    if maxval != 255:
        values = (values * 255 * 2 + maxval) // (2 * maxval)  # round-half-up rescale
    if channels == 1:
        gray = values.reshape(h, w)
        rgb = np.repeat(gray[:, :, None], 3, axis=2)
    else:
        rgb = values.reshape(h, w, 3)
    return RgbImage(rgb.astype(np.uint8))


def decode_image(path) -> RgbImage:
    """Read and decode an image file; missing files are their own error."""
    if not os.path.isfile(path):
        raise MissingFileError(f"no such image file: {path}")
    with open(path, "rb") as fh:
        return decode(fh.read())


def encode_ppm(img: RgbImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data.tobytes()


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data.tobytes()


def encode_stage(stage) -> bytes:
    """Stage rasters dump as PGM; binary masks stretch to 0/255 for viewing."""
    if isinstance(stage, BinaryImage):
        return encode_pgm(GrayImage((stage.data * np.uint8(255))))
    if isinstance(stage, GrayImage):
        return encode_pgm(stage)
    return encode_ppm(stage)
