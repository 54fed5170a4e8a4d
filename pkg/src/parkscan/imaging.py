"""Pixel-level primitives: grayscale conversion, resizing, blur, thresholding,
Canny edge detection and binary morphology.

All operations are pure functions: they never mutate their inputs and are safe
to call concurrently.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

# 3x3 blur kernel, coefficients (1/16)[1 2 1; 2 4 2; 1 2 1]
GAUSSIAN_3X3 = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.int64)

# Derivative operators for the edge gradient (Sobel).
_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)

# Largest possible Sobel L2 magnitude for an 8-bit image; used to map
# gradient magnitudes into the [0, 255] intensity range so the Canny
# thresholds are expressed in intensity units.
_MAX_GRADIENT = 4.0 * 255.0 * math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel 8-bit raster; ``data`` has shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.dtype != np.uint8:
            raise ValueError("GrayImage requires a 2-D uint8 array")
        self.data.setflags(write=False)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Interleaved 8-bit color raster; ``data`` has shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3 or self.data.dtype != np.uint8:
            raise ValueError("RgbImage requires an (h, w, 3) uint8 array")
        self.data.setflags(write=False)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Strictly 0/1 raster, 1 = foreground; ``data`` has shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.dtype != np.uint8:
            raise ValueError("BinaryImage requires a 2-D uint8 array")
        if self.data.size and self.data.max() > 1:
            raise ValueError("BinaryImage values must be 0 or 1")
        self.data.setflags(write=False)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class Kernel:
    """Small convolution/structuring kernel; ``weights`` has shape (rows, cols)."""

    weights: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2 or self.weights.size == 0:
            raise ValueError("Kernel requires a non-empty 2-D array")
        self.weights.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def ones(cls, rows: int, cols: int) -> "Kernel":
        return cls(np.ones((rows, cols), dtype=np.uint8))

    @property
    def anchor(self) -> tuple[int, int]:
        # Even dimensions round toward the top-left cell.
        return (self.rows - 1) // 2, (self.cols - 1) // 2


def to_grayscale(img: RgbImage) -> GrayImage:
    """Luminance conversion, L = round(0.299 r + 0.587 g + 0.114 b).

    Integer arithmetic keeps the decimal round-half-up exact (no float drift).
    """
    rgb = img.data.astype(np.int64)
    lum = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500) // 1000
    return GrayImage(lum.astype(np.uint8))


def _bilinear_plane(plane: np.ndarray, w: int, h: int) -> np.ndarray:
    src_h, src_w = plane.shape
    # Half-pixel-center sampling: identity resize is exact, a 2:1 downscale
    # averages each aligned 2x2 block.
    xs = (np.arange(w, dtype=np.float64) + 0.5) * (src_w / w) - 0.5
    ys = (np.arange(h, dtype=np.float64) + 0.5) * (src_h / h) - 0.5
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    x0c = np.clip(x0, 0, src_w - 1)
    x1c = np.clip(x0 + 1, 0, src_w - 1)
    y0c = np.clip(y0, 0, src_h - 1)
    y1c = np.clip(y0 + 1, 0, src_h - 1)

    p = plane.astype(np.float64)
    top = p[y0c[:, None], x0c[None, :]] * (1 - fx) + p[y0c[:, None], x1c[None, :]] * fx
    bot = p[y1c[:, None], x0c[None, :]] * (1 - fx) + p[y1c[:, None], x1c[None, :]] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def resize(img, w: int, h: int):
    """Bilinear resize to exactly w x h; works on GrayImage and RgbImage."""
    if w < 1 or h < 1:
        raise ValueError("resize target must be at least 1x1")
    if isinstance(img, GrayImage):
        return GrayImage(_bilinear_plane(img.data, w, h))
    if isinstance(img, RgbImage):
        planes = [_bilinear_plane(img.data[:, :, c], w, h) for c in range(3)]
        return RgbImage(np.stack(planes, axis=-1))
    raise TypeError("resize expects GrayImage or RgbImage")


def gaussian_blur_3x3(img: GrayImage) -> GrayImage:
    """Convolution with the fixed 3x3 blur kernel, replicate borders.

    Exact integer rounding: round-half-up of sum/16.
    """
    padded = np.pad(img.data.astype(np.int64), 1, mode="edge")
    h, w = img.data.shape
    acc = np.zeros((h, w), dtype=np.int64)
    for dy in range(3):
        for dx in range(3):
            acc += GAUSSIAN_3X3[dy, dx] * padded[dy : dy + h, dx : dx + w]
    out = (2 * acc + 16) // 32  # round-half-up of acc/16
    return GrayImage(np.clip(out, 0, 255).astype(np.uint8))


def gaussian_1d(x: float, sigma: float) -> float:
    """Normalized 1-D Gaussian, G(x) = exp(-x^2 / 2 sigma^2) / (sqrt(2 pi) sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return math.exp(-(x * x) / (2.0 * sigma * sigma)) / (math.sqrt(2.0 * math.pi) * sigma)


def truncate_threshold(img: GrayImage, t: int) -> GrayImage:
    """Clamp-from-above: out = t where in > t, else in (out = min(in, t))."""
    if not 0 <= t <= 255:
        raise ValueError("threshold must be in [0, 255]")
    return GrayImage(np.minimum(img.data, np.uint8(t)))


def _gradient(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.pad(gray.astype(np.float64), 1, mode="edge")
    h, w = gray.shape
    gx = np.zeros((h, w), dtype=np.float64)
    gy = np.zeros((h, w), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            window = padded[dy : dy + h, dx : dx + w]
            if _SOBEL_X[dy, dx]:
                gx += _SOBEL_X[dy, dx] * window
            if _SOBEL_Y[dy, dx]:
                gy += _SOBEL_Y[dy, dx] * window
    return gx, gy


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep only local maxima along the gradient direction (4 bins).

    Ties on a 2-pixel plateau keep exactly one pixel: the comparison is
    >= against the lower-coordinate neighbor, > against the higher one.
    """
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = mag

    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    bin0 = (angle < 22.5) | (angle >= 157.5)   # horizontal gradient: E-W neighbors
    bin45 = (angle >= 22.5) & (angle < 67.5)
    bin90 = (angle >= 67.5) & (angle < 112.5)  # vertical gradient: N-S neighbors
    bin135 = (angle >= 112.5) & (angle < 157.5)

    def shifted(dy, dx):
        return padded[1 + dy : h + 1 + dy, 1 + dx : w + 1 + dx]

    keep = np.zeros((h, w), dtype=bool)
    for mask, (dy, dx) in (
        (bin0, (0, 1)),
        (bin45, (1, 1)),
        (bin90, (1, 0)),
        (bin135, (1, -1)),
    ):
        prev = shifted(-dy, -dx)
        nxt = shifted(dy, dx)
        keep |= mask & (mag >= prev) & (mag > nxt)
    return np.where(keep, mag, 0.0)


def canny(img: GrayImage, low: float, high: float) -> BinaryImage:
    """Four-stage Canny: Sobel gradients, magnitude scaled to [0, 255],
    non-maximum suppression, then double-threshold hysteresis where weak
    pixels survive only when 8-connected (through weak chains) to a strong one.
    """
    if not 0 <= low <= high <= 255:
        raise ValueError("thresholds must satisfy 0 <= low <= high <= 255")
    gx, gy = _gradient(img.data)
    mag = np.hypot(gx, gy) * (255.0 / _MAX_GRADIENT)
    nms = _nonmax_suppress(mag, gx, gy)

    strong = nms >= high
    weak = (nms >= low) & ~strong
    if not strong.any():
        return BinaryImage(np.zeros_like(img.data, dtype=np.uint8))

    out = strong.copy()
    h, w = out.shape
    queue = deque(zip(*np.nonzero(strong)))
    while queue:
        y, x = queue.popleft()
        for ny in range(max(0, y - 1), min(h, y + 2)):
            for nx in range(max(0, x - 1), min(w, x + 2)):
                if weak[ny, nx] and not out[ny, nx]:
                    out[ny, nx] = True
                    queue.append((ny, nx))
    return BinaryImage(out.astype(np.uint8))


def _require_binary_kernel(k: Kernel) -> np.ndarray:
    weights = np.asarray(k.weights)
    if not np.isin(weights, (0, 1)).all():
        raise ValueError("morphology requires a 0/1 kernel")
    return weights.astype(bool)


def _shift(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """out(y, x) = img(y + dy, x + dx), zero where out of bounds."""
    h, w = img.shape
    out = np.zeros_like(img)
    ys = slice(max(0, dy), min(h, h + dy))
    xs = slice(max(0, dx), min(w, w + dx))
    yd = slice(max(0, -dy), min(h, h - dy))
    xd = slice(max(0, -dx), min(w, w - dx))
    out[yd, xd] = img[ys, xs]
    return out


def erode(img: BinaryImage, k: Kernel, iterations: int = 1) -> BinaryImage:
    """Morphological erosion: output 1 iff every kernel 1-cell lands on a 1
    ("fits"); pixels outside the image count as 0.
    """
    cells = _require_binary_kernel(k)
    ay, ax = k.anchor
    data = img.data.astype(bool)
    offsets = [(cy - ay, cx - ax) for cy, cx in zip(*np.nonzero(cells))]
    for _ in range(iterations):
        acc = np.ones_like(data)
        for dy, dx in offsets:
            acc &= _shift(data, dy, dx)
        data = acc
    return BinaryImage(data.astype(np.uint8))


def dilate(img: BinaryImage, k: Kernel, iterations: int = 1) -> BinaryImage:
    """Morphological dilation: output 1 iff any 1-cell of the reflected kernel
    overlaps a 1 ("hits").
    """
    cells = _require_binary_kernel(k)
    ay, ax = k.anchor
    data = img.data.astype(bool)
    offsets = [(cy - ay, cx - ax) for cy, cx in zip(*np.nonzero(cells))]
    for _ in range(iterations):
        acc = np.zeros_like(data)
        for dy, dx in offsets:
            acc |= _shift(data, -dy, -dx)
        data = acc
    return BinaryImage(data.astype(np.uint8))
