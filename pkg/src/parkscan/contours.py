"""External contour extraction from binary images plus the geometry the
detector filters on: filled area, bounding boxes, principal-axis angle and
minimum-area rotated rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .imaging import BinaryImage

# Moore neighborhood in clockwise order on screen coordinates (y grows down),
# starting at the west neighbor. Entries are (dy, dx).
_RING = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))


@dataclass(frozen=True, eq=False)
class Contour:
    """One foreground connected component.

    points: ordered external-boundary pixels (x, y), traced clockwise
    area: filled component size in pixels (interior holes count)
    bbox: axis-aligned (x, y, w, h)
    centroid: (x, y) center of mass of the filled component
    ellipse_angle: principal-axis orientation, degrees in [0, 180)
    component_pixels: (n, 2) array of (y, x) foreground pixels, used to scrub
        the component out of a working mask; None for synthetic contours
    """

    points: tuple
    area: int
    bbox: tuple
    centroid: tuple
    ellipse_angle: float
    component_pixels: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class ContourSet:
    contours: tuple
    source_dims: tuple  # (width, height)

    def __len__(self) -> int:
        return len(self.contours)

    def __iter__(self):
        return iter(self.contours)


def _label_components(data: np.ndarray, connectivity: int) -> tuple[np.ndarray, int]:
    """Run-based two-pass labeling. Returns (label array, count); labels are
    1-based, 0 is background.
    """
    h, w = data.shape
    parent: list[int] = []

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    reach = 1 if connectivity == 8 else 0
    runs_per_row: list[list[tuple[int, int, int]]] = []
    prev: list[tuple[int, int, int]] = []
    for y in range(h):
        idx = np.flatnonzero(data[y])
        cur: list[tuple[int, int, int]] = []
        if idx.size:
            breaks = np.flatnonzero(np.diff(idx) > 1)
            starts = np.concatenate(([0], breaks + 1))
            ends = np.concatenate((breaks, [idx.size - 1]))
            p = 0
            for s, e in zip(starts, ends):
                xs, xe = int(idx[s]), int(idx[e])
                rid = len(parent)
                parent.append(rid)
                lo, hi = xs - reach, xe + reach
                while p < len(prev) and prev[p][1] < lo:
                    p += 1
                q = p
                while q < len(prev) and prev[q][0] <= hi:
                    union(rid, prev[q][2])
                    q += 1
                cur.append((xs, xe, rid))
        runs_per_row.append(cur)
        prev = cur

    # Compact root ids in first-seen order so labels are deterministic.
    labels = np.zeros((h, w), dtype=np.int32)
    compact: dict[int, int] = {}
    for y, runs in enumerate(runs_per_row):
        for xs, xe, rid in runs:
            root = find(rid)
            lbl = compact.setdefault(root, len(compact) + 1)
            labels[y, xs : xe + 1] = lbl
    return labels, len(compact)


def _trace_boundary(labels: np.ndarray, lbl: int, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore-neighbor boundary walk, clockwise, from the top-left-most pixel.
    Returns (x, y) points; a pinched boundary may legitimately revisit pixels.
    """
    h, w = labels.shape

    def member(y: int, x: int) -> bool:
        return 0 <= y < h and 0 <= x < w and labels[y, x] == lbl

    y0, x0 = start
    points = [(x0, y0)]
    cy, cx = y0, x0
    back = 0  # ring index of the backtrack cell; west of the start is background
    for _ in range(8 * labels.size):
        nxt = None
        for k in range(1, 9):
            i = (back + k) % 8
            dy, dx = _RING[i]
            if member(cy + dy, cx + dx):
                nxt = (cy + dy, cx + dx, i)
                break
        if nxt is None:
            break  # isolated pixel
        ny, nx, i = nxt
        # Backtrack for the next step is the last background cell scanned.
        py, px = _RING[(i - 1) % 8]
        back_cell = (cy + py - ny, cx + px - nx)
        back = _RING.index(back_cell)
        cy, cx = ny, nx
        if (cy, cx) == (y0, x0):
            break
        points.append((cx, cy))
    return points


def _fill_component(comp_mask: np.ndarray) -> tuple[np.ndarray, int, tuple[float, float]]:
    """Flood the bbox exterior (4-connected) around the component; whatever is
    unreachable is the filled region (component plus enclosed holes).
    """
    h, w = comp_mask.shape
    blocked = np.zeros((h + 2, w + 2), dtype=bool)
    blocked[1:-1, 1:-1] = comp_mask
    outside = np.zeros_like(blocked)
    outside[0, :] = outside[-1, :] = True
    outside[:, 0] = outside[:, -1] = True
    while True:
        grown = outside.copy()
        grown[1:, :] |= outside[:-1, :]
        grown[:-1, :] |= outside[1:, :]
        grown[:, 1:] |= outside[:, :-1]
        grown[:, :-1] |= outside[:, 1:]
        grown &= ~blocked
        grown |= outside
        if (grown == outside).all():
            break
        outside = grown
    filled = ~outside[1:-1, 1:-1]
    ys, xs = np.nonzero(filled)
    return filled, int(filled.sum()), (float(xs.mean()), float(ys.mean()))


def _moments_angle(xs, ys) -> float:
    """Principal-axis angle from second-order central moments, in exact
    integer arithmetic so translation invariance holds bit-for-bit.
    """
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(v * v for v in xs)
    syy = sum(v * v for v in ys)
    sxy = sum(a * b for a, b in zip(xs, ys))
    a = n * sxx - sx * sx  # n^2 * mu20
    b = n * syy - sy * sy
    c = n * sxy - sx * sy
    if a == b and c == 0:
        return 0.0
    ang = 0.5 * math.degrees(math.atan2(2 * c, a - b))
    return ang % 180.0


def _angle_from_points(points) -> float:
    xs = [int(p[0]) for p in points]
    ys = [int(p[1]) for p in points]
    if not xs or (min(xs) == max(xs) and min(ys) == max(ys)):
        return 0.0
    if len(xs) < 5:
        return math.degrees(math.atan2(max(ys) - min(ys), max(xs) - min(xs))) % 180.0
    return _moments_angle(xs, ys)


def fit_ellipse_angle(c: Contour) -> float:
    """Orientation of the contour's principal axis, degrees in [0, 180).

    Needs at least 5 points for a moments fit; below that the bounding-box
    diagonal angle is used, and fully degenerate input maps to 0.
    """
    return _angle_from_points(c.points)


def contour_area(c: Contour) -> int:
    """Filled component size in pixels (computed at extraction time)."""
    return c.area


def _convex_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def min_area_rect(c: Contour) -> tuple[tuple[float, float], float, float, float]:
    """Minimum-area enclosing rotated rectangle of the contour points.

    Returns (center, w, h, angle). The angle is in [0, 90) and names the
    direction of the w side; dimensions measure the spread between extreme
    point centers, so a single point yields a zero-size rectangle.
    """
    pts = [(float(x), float(y)) for x, y in c.points]
    if not pts:
        raise ValueError("min_area_rect needs a non-empty contour")
    hull = _convex_hull(pts)
    if len(hull) == 1:
        return (hull[0], 0.0, 0.0, 0.0)

    best = None
    m = len(hull)
    for i in range(m):
        x1, y1 = hull[i]
        x2, y2 = hull[(i + 1) % m]
        ex, ey = x2 - x1, y2 - y1
        norm = math.hypot(ex, ey)
        if norm == 0:
            continue
        dx, dy = ex / norm, ey / norm
        nx, ny = -dy, dx
        proj_d = [px * dx + py * dy for px, py in hull]
        proj_n = [px * nx + py * ny for px, py in hull]
        len_d = max(proj_d) - min(proj_d)
        len_n = max(proj_n) - min(proj_n)
        area = len_d * len_n
        if best is None or area < best[0]:
            mid_d = (max(proj_d) + min(proj_d)) / 2.0
            mid_n = (max(proj_n) + min(proj_n)) / 2.0
            center = (mid_d * dx + mid_n * nx, mid_d * dy + mid_n * ny)
            phi = math.degrees(math.atan2(dy, dx)) % 180.0
            best = (area, center, len_d, len_n, phi)

    _, center, len_d, len_n, phi = best
    if phi < 90.0:
        return (center, len_d, len_n, phi)
    # The edge direction is in [90, 180); the normal direction is the in-range
    # axis, so it carries the width.
    return (center, len_n, len_d, phi - 90.0)


def find_external_contours(img: BinaryImage, connectivity: int = 8) -> ContourSet:
    """One contour per foreground connected component (holes ignored)."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    data = img.data
    labels, count = _label_components(data, connectivity)
    if count == 0:
        return ContourSet((), (img.width, img.height))

    ys, xs = np.nonzero(data)
    lbls = labels[ys, xs]
    order = np.argsort(lbls, kind="stable")
    ys, xs, lbls = ys[order], xs[order], lbls[order]
    bounds = np.searchsorted(lbls, np.arange(1, count + 2))

    contours = []
    for lbl in range(1, count + 1):
        lo, hi = bounds[lbl - 1], bounds[lbl]
        cys, cxs = ys[lo:hi], xs[lo:hi]
        x_min, x_max = int(cxs.min()), int(cxs.max())
        y_min, y_max = int(cys.min()), int(cys.max())
        bbox = (x_min, y_min, x_max - x_min + 1, y_max - y_min + 1)

        # Row-major order means the first pixel is the top-left-most.
        start = (int(cys[0]), int(cxs[0]))
        points = _trace_boundary(labels, lbl, start)

        comp_mask = np.zeros((bbox[3], bbox[2]), dtype=bool)
        comp_mask[cys - y_min, cxs - x_min] = True
        _, area, (cx_local, cy_local) = _fill_component(comp_mask)
        centroid = (cx_local + x_min, cy_local + y_min)

        pix = np.stack([cys, cxs], axis=1).astype(np.int32)
        contours.append(
            Contour(
                points=tuple(points),
                area=area,
                bbox=bbox,
                centroid=centroid,
                ellipse_angle=_angle_from_points(points),
                component_pixels=pix,
            )
        )
    return ContourSet(tuple(contours), (img.width, img.height))
