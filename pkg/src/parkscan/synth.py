"""Seeded synthetic parking scenes with known ground truth.

Scenes are top-down: a uniform light ground, textured dark car rectangles
centered on the configured slot row (individual rotation up to +/-15 deg),
optional sub-threshold speckles and a vertical occlusion bar. The slot
geometry comes straight from the lot config's manual box, so the generator
and the detector always agree about where the slots are.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .config import LotConfig
from .detector import DetectorParams, ManualBox
from .imaging import RgbImage
from .netpbm import encode_ppm

BG_SHADE = 200
BAR_SHADE = 90


@dataclass(frozen=True)
class CarSpec:
    center: tuple
    width: float
    height: float
    angle: float  # degrees
    shade: int
    noise_seed: int


@dataclass(frozen=True)
class SceneSpec:
    bits: str
    cars: tuple
    speckles: tuple  # ((x, y, r, shade), ...)
    bar_x: int | None  # occlusion bar, None when absent


def synthetic_lot_config(slot_count: int = 4) -> LotConfig:
    """Config tuned for generated scenes.

    Thresholds follow the generated statistics (soft edges after blur and the
    truncate clamp), and module classification is pinned to the manual-box
    path, which is the robust regime for these scenes.
    """
    params = DetectorParams(
        slot_count=slot_count,
        truncate_t=150,
        module1_min_contours=1000,
        manual_box=ManualBox(width=160.0, height=120.0, angle=0.0, origin=(180.0, 150.0)),
    )
    gps = tuple((12.84 + 0.0005 * i, 80.15 + 0.0005 * i) for i in range(slot_count))
    return LotConfig(
        lot_id="synthetic",
        slot_count=slot_count,
        canny_lo=20.0,
        canny_hi=40.0,
        params=params,
        gps=gps,
    )


def slot_centers(config: LotConfig) -> list[tuple[float, float]]:
    mb = config.params.manual_box
    rad = math.radians(mb.angle)
    dx, dy = math.cos(rad), math.sin(rad)
    ox, oy = mb.origin
    return [(ox + i * mb.width * dx, oy + i * mb.width * dy) for i in range(config.slot_count)]


def sample_scene(
    rng: np.random.Generator,
    config: LotConfig,
    occupancy_p: float = 0.5,
    speckles: int = 0,
    occlusion_p: float = 0.0,
) -> SceneSpec:
    mb = config.params.manual_box
    w, h = config.params.resize_to
    occupied = rng.random(config.slot_count) < occupancy_p
    cars = []
    for center, taken in zip(slot_centers(config), occupied):
        if not taken:
            continue
        cw = float(rng.uniform(0.60, 0.75) * mb.width)
        ch = float(rng.uniform(0.50, 0.65) * mb.height)
        jx, jy = rng.uniform(-6, 6), rng.uniform(-6, 6)
        cars.append(
            CarSpec(
                center=(center[0] + jx, center[1] + jy),
                width=cw,
                height=ch,
                angle=float(rng.uniform(-15, 15)),
                shade=int(rng.integers(50, 76)),
                noise_seed=int(rng.integers(0, 2**31)),
            )
        )
    specks = tuple(
        (
            int(rng.integers(2, w - 2)),
            int(rng.integers(2, h - 2)),
            int(rng.integers(1, 3)),
            int(rng.integers(40, 110)),
        )
        for _ in range(speckles)
    )
    bar_x = None
    if occlusion_p > 0 and rng.random() < occlusion_p:
        bar_x = int(rng.integers(40, w - 40))
    bits = "".join("1" if b else "0" for b in occupied)
    return SceneSpec(bits=bits, cars=tuple(cars), speckles=specks, bar_x=bar_x)


def render_scene(spec: SceneSpec, config: LotConfig) -> RgbImage:
    w, h = config.params.resize_to
    canvas = np.full((h, w), BG_SHADE, dtype=np.int64)

    if spec.bar_x is not None:
        canvas[:, max(0, spec.bar_x - 4) : min(w, spec.bar_x + 4)] = BAR_SHADE

    for car in spec.cars:
        rad = math.radians(car.angle)
        dx, dy = math.cos(rad), math.sin(rad)
        half_w, half_h = car.width / 2.0, car.height / 2.0
        # Rasterize over the rotated rect's bounding box only.
        reach_x = half_w * abs(dx) + half_h * abs(dy)
        reach_y = half_w * abs(dy) + half_h * abs(dx)
        x0 = max(0, int(math.floor(car.center[0] - reach_x)))
        x1 = min(w, int(math.ceil(car.center[0] + reach_x)) + 1)
        y0 = max(0, int(math.floor(car.center[1] - reach_y)))
        y1 = min(h, int(math.ceil(car.center[1] + reach_y)) + 1)
        ys, xs = np.mgrid[y0:y1, x0:x1]
        px = xs - car.center[0]
        py = ys - car.center[1]
        u = px * dx + py * dy
        v = -px * dy + py * dx
        inside = (np.abs(u) <= half_w) & (np.abs(v) <= half_h)
        noise = np.random.default_rng(car.noise_seed).integers(
            -45, 46, size=inside.shape, dtype=np.int64
        )
        block = canvas[y0:y1, x0:x1]
        block[inside] = np.clip(car.shade + noise[inside], 5, 120)

    for x, y, r, shade in spec.speckles:
        ys, xs = np.mgrid[max(0, y - r) : min(h, y + r + 1), max(0, x - r) : min(w, x + r + 1)]
        disk = (xs - x) ** 2 + (ys - y) ** 2 <= r * r
        block = canvas[max(0, y - r) : min(h, y + r + 1), max(0, x - r) : min(w, x + r + 1)]
        block[disk] = shade

    gray = np.clip(canvas, 0, 255).astype(np.uint8)
    return RgbImage(np.repeat(gray[:, :, None], 3, axis=2))


def gen_synthetic(
    seed: int,
    n_scenes: int,
    config: LotConfig,
    out_dir,
    occupancy_p: float = 0.5,
    speckles: int = 0,
    occlusion_p: float = 0.0,
) -> list[tuple[str, str]]:
    """Write scene PPMs plus a truth file; fully deterministic per seed.

    Returns the (scene_id, bits) pairs in generation order.
    """
    rng = np.random.default_rng(seed)
    os.makedirs(out_dir, exist_ok=True)
    pairs = []
    for i in range(n_scenes):
        spec = sample_scene(rng, config, occupancy_p, speckles, occlusion_p)
        scene_id = f"scene_{i:04d}"
        img = render_scene(spec, config)
        with open(os.path.join(out_dir, f"{scene_id}.ppm"), "wb") as fh:
            fh.write(encode_ppm(img))
        pairs.append((scene_id, spec.bits))
    with open(os.path.join(out_dir, "truth.txt"), "w", encoding="ascii") as fh:
        for scene_id, bits in pairs:
            fh.write(f"{scene_id} {bits}\n")
    return pairs
