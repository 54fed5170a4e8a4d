"""Detection brain: false-contour removal, module classification, flexible
position cropping, slot box derivation, occupancy judgement and annotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .contours import Contour, ContourSet, find_external_contours, min_area_rect
from .imaging import (
    BinaryImage,
    GrayImage,
    Kernel,
    RgbImage,
    canny,
    dilate,
    erode,
    gaussian_blur_3x3,
    resize,
    to_grayscale,
    truncate_threshold,
)

RED = (255, 0, 0)
GREEN = (0, 255, 0)


class Module(Enum):
    MODULE1 = 1  # contour-rich scene, boxes derived from contours
    MODULE2 = 2  # near-empty scene, manual box parameters


@dataclass(frozen=True)
class ManualBox:
    """Operator-supplied slot box used by Module 2 and Module 1 / Case 2."""

    width: float = 160.0
    height: float = 120.0
    angle: float = 0.0
    origin: tuple = (180.0, 150.0)  # center of the first slot


@dataclass(frozen=True)
class DetectorParams:
    min_area: int = 70
    y_limit: int = 270
    noise_angle_lo: float = 80.0
    noise_angle_hi: float = 100.0
    module1_min_contours: int = 5
    occupancy_count_threshold: int = 1
    crop_limit: int | None = None  # None: 0.75 x image height
    crop_margin: int = 10
    manual_box: ManualBox = field(default_factory=ManualBox)
    slot_count: int = 4
    # Pipeline plumbing shared with the config file.
    truncate_t: int = 127
    resize_to: tuple = (960, 540)
    connectivity: int = 8
    morph_orientation: str = "horizontal"  # 1x2 ones kernel; "vertical" for 2x1

    def __post_init__(self):
        if self.min_area < 0:
            raise ValueError("min_area must be >= 0")
        if not 0 <= self.noise_angle_lo < self.noise_angle_hi <= 180:
            raise ValueError("noise angle band must satisfy 0 <= lo < hi <= 180")
        if self.slot_count < 1:
            raise ValueError("slot_count must be >= 1")
        if self.morph_orientation not in ("horizontal", "vertical"):
            raise ValueError("morph_orientation must be horizontal or vertical")

    def morph_kernel(self) -> Kernel:
        return Kernel.ones(1, 2) if self.morph_orientation == "horizontal" else Kernel.ones(2, 1)


@dataclass(frozen=True)
class SlotBox:
    center: tuple
    width: float
    height: float
    angle: float  # degrees
    index: int

    def corners(self) -> list[tuple[float, float]]:
        rad = math.radians(self.angle)
        dx, dy = math.cos(rad), math.sin(rad)
        nx, ny = -dy, dx
        cx, cy = self.center
        hw, hh = self.width / 2.0, self.height / 2.0
        return [
            (cx - hw * dx - hh * nx, cy - hw * dy - hh * ny),
            (cx + hw * dx - hh * nx, cy + hw * dy - hh * ny),
            (cx + hw * dx + hh * nx, cy + hw * dy + hh * ny),
            (cx - hw * dx + hh * nx, cy - hw * dy + hh * ny),
        ]

    def contains(self, point) -> bool:
        rad = math.radians(self.angle)
        dx, dy = math.cos(rad), math.sin(rad)
        px, py = point[0] - self.center[0], point[1] - self.center[1]
        u = px * dx + py * dy
        v = -px * dy + py * dx
        return abs(u) <= self.width / 2.0 and abs(v) <= self.height / 2.0


@dataclass(frozen=True)
class SlotVerdict:
    index: int
    occupied: bool
    box: SlotBox | None


@dataclass(frozen=True, eq=False)
class SlotReport:
    verdicts: tuple
    bit_string: str
    annotated: RgbImage | None = None


def remove_false_contours(
    cs: ContourSet, mask: BinaryImage, p: DetectorParams
) -> tuple[ContourSet, BinaryImage]:
    """Drop noise contours and zero their pixels in a copy of the mask.

    A contour is noise when its filled area is below min_area, its top edge
    sits below y_limit, or its axis angle falls strictly inside the
    (noise_angle_lo, noise_angle_hi) band.
    """
    if (mask.width, mask.height) != cs.source_dims:
        raise ValueError("mask dimensions do not match the contour set")
    scrubbed = mask.data.copy()
    kept = []
    for c in cs:
        top_y = c.bbox[1]
        noisy = (
            c.area < p.min_area
            or top_y > p.y_limit
            or p.noise_angle_lo < c.ellipse_angle < p.noise_angle_hi
        )
        if not noisy:
            kept.append(c)
            continue
        if c.component_pixels is not None:
            scrubbed[c.component_pixels[:, 0], c.component_pixels[:, 1]] = 0
        else:
            for x, y in c.points:
                scrubbed[y, x] = 0
    return ContourSet(tuple(kept), cs.source_dims), BinaryImage(scrubbed)


def classify_module(cs: ContourSet, p: DetectorParams) -> Module:
    """Module 1 for contour-rich scenes, Module 2 (manual parameters) otherwise."""
    return Module.MODULE1 if len(cs) >= p.module1_min_contours else Module.MODULE2


def flexible_crop(img, cs: ContourSet, p: DetectorParams):
    """Drop the empty rows below the lowest contour extent (Module 1 only).

    The anchor is the largest bbox bottom over all contours; cropping happens
    only when the anchor is below, in value, the configured limit. Returns the
    (possibly) cropped image and a y offset, which is always 0 since only
    bottom rows are removed.
    """
    if not len(cs):
        return img, 0
    limit = p.crop_limit if p.crop_limit is not None else int(0.75 * img.height)
    anchor = max(c.bbox[1] + c.bbox[3] for c in cs)
    if anchor >= limit:
        return img, 0
    keep = min(img.height, anchor + p.crop_margin)
    cls = type(img)
    return cls(img.data[:keep].copy()), 0


def _leftmost(cs: ContourSet) -> Contour:
    return min(cs, key=lambda c: (c.centroid[0], c.centroid[1]))


def _box_fits(center, width, height, angle, image_w) -> bool:
    probe = SlotBox(center, width, height, angle, 0)
    return max(x for x, _ in probe.corners()) <= image_w


def _advance(center, stride, angle):
    rad = math.radians(angle)
    return (center[0] + stride * math.cos(rad), center[1] + stride * math.sin(rad))


def derive_boxes(cs: ContourSet, p: DetectorParams, mode: Module) -> list[SlotBox]:
    """Tile slot boxes left to right until the image edge, at most slot_count.

    Module 1 / Case 1 (a car in the first slot): the leftmost contour's
    min-area rectangle is the template and the stride. Module 1 / Case 2 and
    Module 2 start from the manual box; in Case 2 the template is re-derived
    from the first contour a box lands on.
    """
    image_w = cs.source_dims[0]
    mb = p.manual_box
    manual_first = SlotBox(mb.origin, mb.width, mb.height, mb.angle, 0)

    if mode is Module.MODULE1:
        if not len(cs):
            raise ValueError("Module 1 requires a non-empty contour set")
        case1 = any(manual_first.contains(c.centroid) for c in cs)
        if case1:
            center, w, h, angle = min_area_rect(_leftmost(cs))
            return _tile_plain(center, w, h, angle, p, image_w)
        return _tile_rederive(cs, p, image_w)
    return _tile_plain(mb.origin, mb.width, mb.height, mb.angle, p, image_w)


def _tile_plain(center, w, h, angle, p: DetectorParams, image_w) -> list[SlotBox]:
    boxes: list[SlotBox] = []
    while len(boxes) < p.slot_count and _box_fits(center, w, h, angle, image_w):
        boxes.append(SlotBox(center, w, h, angle, len(boxes)))
        center = _advance(center, w, angle)
    return boxes


def _tile_rederive(cs: ContourSet, p: DetectorParams, image_w) -> list[SlotBox]:
    mb = p.manual_box
    center, w, h, angle = mb.origin, mb.width, mb.height, mb.angle
    derived = False
    boxes: list[SlotBox] = []
    while len(boxes) < p.slot_count and _box_fits(center, w, h, angle, image_w):
        if not derived:
            probe = SlotBox(center, w, h, angle, len(boxes))
            hit = next((c for c in cs if probe.contains(c.centroid)), None)
            if hit is not None:
                center, w, h, angle = min_area_rect(hit)
                derived = True
                if not _box_fits(center, w, h, angle, image_w):
                    break
        boxes.append(SlotBox(center, w, h, angle, len(boxes)))
        center = _advance(center, w, angle)
    return boxes


def judge_occupancy(boxes, cs: ContourSet, p: DetectorParams) -> SlotReport:
    """Per-slot verdicts: a slot is occupied when at least
    occupancy_count_threshold contour centroids fall inside its box.

    The verdict list always has exactly slot_count entries: extra detected
    boxes are dropped, missing ones pad as vacant.
    """
    verdicts = []
    for i in range(p.slot_count):
        if i < len(boxes):
            box = boxes[i]
            count = sum(1 for c in cs if box.contains(c.centroid))
            verdicts.append(SlotVerdict(i, count >= p.occupancy_count_threshold, box))
        else:
            verdicts.append(SlotVerdict(i, False, None))
    bits = "".join("1" if v.occupied else "0" for v in verdicts)
    return SlotReport(tuple(verdicts), bits)


def _paint(arr: np.ndarray, x: float, y: float, color) -> None:
    h, w = arr.shape[:2]
    xi, yi = int(math.floor(x)), int(math.floor(y))
    for dy in (0, 1):
        for dx in (0, 1):
            px, py = xi + dx, yi + dy
            if 0 <= px < w and 0 <= py < h:
                arr[py, px] = color


def _draw_segment(arr: np.ndarray, p0, p1, color) -> None:
    # Dense parametric walk with a 2x2 stamp: a 2 px stroke.
    length = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    steps = max(1, int(math.ceil(length * 2)))
    for i in range(steps + 1):
        t = i / steps
        _paint(arr, p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]), color)


def annotate(img: RgbImage, report: SlotReport) -> RgbImage:
    """Draw each slot box outline: red for occupied, green for vacant."""
    canvas = img.data.copy()
    for v in report.verdicts:
        if v.box is None:
            continue
        color = RED if v.occupied else GREEN
        corners = v.box.corners()
        for i in range(4):
            _draw_segment(canvas, corners[i], corners[(i + 1) % 4], color)
    return RgbImage(canvas)


def detect_stages(img: RgbImage, p: DetectorParams, canny_lo: float, canny_hi: float):
    """Run the full pipeline and keep the intermediate rasters around."""
    resized = resize(img, p.resize_to[0], p.resize_to[1])
    gray = to_grayscale(resized)
    blur = gaussian_blur_3x3(gray)
    trunc = truncate_threshold(blur, p.truncate_t)
    edges = canny(trunc, canny_lo, canny_hi)
    kernel = p.morph_kernel()
    morphed = dilate(erode(edges, kernel, 1), kernel, 2)
    cs = find_external_contours(morphed, p.connectivity)
    filtered, mask = remove_false_contours(cs, morphed, p)
    mode = classify_module(filtered, p)
    if mode is Module.MODULE1:
        mask, _ = flexible_crop(mask, filtered, p)
    boxes = derive_boxes(filtered, p, mode)
    report = judge_occupancy(boxes, filtered, p)
    report = replace(report, annotated=annotate(resized, report))
    stages = {
        "1gray": gray,
        "2blur": blur,
        "3trunc": trunc,
        "4canny": edges,
        "5morph": morphed,
        "6filtered": mask,
    }
    return report, stages


def detect(img: RgbImage, p: DetectorParams, canny_lo: float, canny_hi: float) -> SlotReport:
    """Raw image in, per-slot occupancy verdicts and annotated image out."""
    report, _ = detect_stages(img, p, canny_lo, canny_hi)
    return report
