"""Lot configuration: JSON file in, validated LotConfig out.

Every detector knob is exposed with its stock default so a minimal config can
be just a lot id and GPS list.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .detector import DetectorParams, ManualBox

ENV_CONFIG = "PARKSCAN_CONFIG"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class LotConfig:
    lot_id: str = "lot"
    slot_count: int = 4
    canny_lo: float = 50.0
    canny_hi: float = 150.0
    params: DetectorParams = field(default_factory=DetectorParams)
    gps: tuple = ()  # ((lat, lon), ...) with one entry per slot

    def __post_init__(self):
        if self.slot_count < 1:
            raise ConfigError("slot_count must be >= 1")
        gps = self.gps if self.gps else tuple((0.0, 0.0) for _ in range(self.slot_count))
        object.__setattr__(self, "gps", tuple((float(a), float(b)) for a, b in gps))
        if len(self.gps) != self.slot_count:
            raise ConfigError("gps list length must equal slot_count")
        for lat, lon in self.gps:
            if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
                raise ConfigError(f"gps out of range: ({lat}, {lon})")
        if not 0 <= self.canny_lo <= self.canny_hi <= 255:
            raise ConfigError("canny thresholds must satisfy 0 <= low <= high <= 255")
        if self.params.slot_count != self.slot_count:
            object.__setattr__(self, "params", _replace_slots(self.params, self.slot_count))

    def to_dict(self) -> dict:
        p = self.params
        return {
            "lot_id": self.lot_id,
            "slot_count": self.slot_count,
            "canny": {"low": self.canny_lo, "high": self.canny_hi},
            "resize": {"width": p.resize_to[0], "height": p.resize_to[1]},
            "truncate_threshold": p.truncate_t,
            "detector": {
                "min_area": p.min_area,
                "y_limit": p.y_limit,
                "noise_angle_lo": p.noise_angle_lo,
                "noise_angle_hi": p.noise_angle_hi,
                "module1_min_contours": p.module1_min_contours,
                "occupancy_count_threshold": p.occupancy_count_threshold,
                "crop_limit": p.crop_limit,
                "crop_margin": p.crop_margin,
                "connectivity": p.connectivity,
                "morph_orientation": p.morph_orientation,
                "manual_box": {
                    "width": p.manual_box.width,
                    "height": p.manual_box.height,
                    "angle": p.manual_box.angle,
                    "origin": list(p.manual_box.origin),
                },
            },
            "gps": [list(pair) for pair in self.gps],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _replace_slots(p: DetectorParams, n: int) -> DetectorParams:
    from dataclasses import replace

    return replace(p, slot_count=n)


def _take(src: dict, key, default, caster):
    value = src.pop(key, None)
    if value is None:
        return default
    try:
        return caster(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def _reject_unknown(src: dict, where: str) -> None:
    if src:
        raise ConfigError(f"unknown {where} keys: {sorted(src)}")


def parse_config(doc: dict) -> LotConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    doc = dict(doc)
    lot_id = _take(doc, "lot_id", "lot", str)
    slot_count = _take(doc, "slot_count", 4, int)

    canny = dict(doc.pop("canny", {}) or {})
    canny_lo = _take(canny, "low", 50.0, float)
    canny_hi = _take(canny, "high", 150.0, float)
    _reject_unknown(canny, "canny")

    resize = dict(doc.pop("resize", {}) or {})
    resize_w = _take(resize, "width", 960, int)
    resize_h = _take(resize, "height", 540, int)
    _reject_unknown(resize, "resize")
    if resize_w < 1 or resize_h < 1:
        raise ConfigError("resize target must be positive")

    truncate_t = _take(doc, "truncate_threshold", 127, int)
    if not 0 <= truncate_t <= 255:
        raise ConfigError("truncate_threshold must be in [0, 255]")

    det = dict(doc.pop("detector", {}) or {})
    mb = dict(det.pop("manual_box", {}) or {})
    origin = mb.pop("origin", (180.0, 150.0))
    try:
        origin = (float(origin[0]), float(origin[1]))
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad manual_box origin: {origin!r}") from exc
    manual_box = ManualBox(
        width=_take(mb, "width", 160.0, float),
        height=_take(mb, "height", 120.0, float),
        angle=_take(mb, "angle", 0.0, float),
        origin=origin,
    )
    _reject_unknown(mb, "manual_box")

    crop_limit = det.pop("crop_limit", None)
    if crop_limit is not None:
        try:
            crop_limit = int(crop_limit)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for crop_limit: {crop_limit!r}") from exc

    try:
        params = DetectorParams(
            min_area=_take(det, "min_area", 70, int),
            y_limit=_take(det, "y_limit", 270, int),
            noise_angle_lo=_take(det, "noise_angle_lo", 80.0, float),
            noise_angle_hi=_take(det, "noise_angle_hi", 100.0, float),
            module1_min_contours=_take(det, "module1_min_contours", 5, int),
            occupancy_count_threshold=_take(det, "occupancy_count_threshold", 1, int),
            crop_limit=crop_limit,
            crop_margin=_take(det, "crop_margin", 10, int),
            connectivity=_take(det, "connectivity", 8, int),
            morph_orientation=_take(det, "morph_orientation", "horizontal", str),
            manual_box=manual_box,
            slot_count=slot_count,
            truncate_t=truncate_t,
            resize_to=(resize_w, resize_h),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _reject_unknown(det, "detector")

    gps = doc.pop("gps", None)
    gps_tuple: tuple = ()
    if gps is not None:
        try:
            gps_tuple = tuple((float(a), float(b)) for a, b in gps)
        except (TypeError, ValueError) as exc:
            raise ConfigError("gps must be a list of [lat, lon] pairs") from exc
    _reject_unknown(doc, "config")

    return LotConfig(
        lot_id=lot_id,
        slot_count=slot_count,
        canny_lo=canny_lo,
        canny_hi=canny_hi,
        params=params,
        gps=gps_tuple,
    )


def load_config(path: str | None) -> LotConfig:
    """Load a config file; falls back to the PARKSCAN_CONFIG env var."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if not path:
        raise ConfigError(f"no config given and {ENV_CONFIG} is unset")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)
