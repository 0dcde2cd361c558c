"""Planar primitives: points, sticks, segments, boxes, annuli, polylines.

Plain double precision with a relative coincidence tolerance (``REL_EPS``
scaled by the extent of the inputs).  Inputs that land inside the tolerance
band are merged or reported, never silently repaired; under the continuous
stick-soup law such configurations have probability zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

REL_EPS = 1e-9


class GeometryError(ValueError):
    """Invalid geometric construction (non-finite, degenerate or empty)."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Stick:
    """One segment of the soup: center, half-length and direction angle."""

    center: Point
    radius: float
    direction: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"stick radius must be positive, got {self.radius}")
        if not (-math.pi / 2 < self.direction <= math.pi / 2):
            raise GeometryError(
                f"stick direction must lie in (-pi/2, pi/2], got {self.direction}"
            )


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        if self.a.x == self.b.x and self.a.y == self.b.y:
            raise GeometryError("degenerate segment: identical endpoints")

    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    def midpoint(self) -> Point:
        return Point((self.a.x + self.b.x) / 2, (self.a.y + self.b.y) / 2)


@dataclass(frozen=True)
class Box:
    min: Point
    max: Point

    def __post_init__(self):
        if not (self.min.x < self.max.x and self.min.y < self.max.y):
            raise GeometryError("box needs min < max on both axes")

    def width(self) -> float:
        return self.max.x - self.min.x

    def height(self) -> float:
        return self.max.y - self.min.y

    def diagonal(self) -> float:
        return math.hypot(self.width(), self.height())

    def center(self) -> Point:
        return Point((self.min.x + self.max.x) / 2, (self.min.y + self.max.y) / 2)

    def contains(self, p: Point, tol: float = 0.0) -> bool:
        return (
            self.min.x - tol <= p.x <= self.max.x + tol
            and self.min.y - tol <= p.y <= self.max.y + tol
        )


@dataclass(frozen=True)
class Disk:
    center: Point
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"disk radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Annulus:
    """Closed annulus between the inner and outer circles around ``center``."""

    center: Point
    inner: float
    outer: float

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise GeometryError(
                f"annulus needs 0 < inner < outer, got ({self.inner}, {self.outer})"
            )


class Polyline:
    """Ordered list of vertices; stored internally as an (n, 2) float array."""

    __slots__ = ("coords",)

    def __init__(self, vertices):
        if isinstance(vertices, np.ndarray):
            coords = np.asarray(vertices, dtype=float)
        else:
            coords = np.asarray(
                [(v.x, v.y) if isinstance(v, Point) else (v[0], v[1]) for v in vertices],
                dtype=float,
            )
        if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] < 1:
            raise GeometryError("polyline needs at least one (x, y) vertex")
        if not np.all(np.isfinite(coords)):
            raise GeometryError("polyline with non-finite coordinates")
        if coords.shape[0] > 1:
            dup = np.all(coords[1:] == coords[:-1], axis=1)
            if np.any(dup):
                raise GeometryError("polyline with repeated consecutive vertices")
        self.coords = coords

    @property
    def vertices(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.coords]

    def length(self) -> float:
        if len(self.coords) < 2:
            return 0.0
        return float(np.sum(np.hypot(*np.diff(self.coords, axis=0).T)))

    def __len__(self) -> int:
        return len(self.coords)


# ---------------------------------------------------------------------------
# scalar operations


def _extent(*values: float) -> float:
    return max(1.0, *(abs(v) for v in values))


def stick_to_segment(s: Stick) -> Segment:
    dx = s.radius * math.cos(s.direction)
    dy = s.radius * math.sin(s.direction)
    return Segment(
        Point(s.center.x - dx, s.center.y - dy),
        Point(s.center.x + dx, s.center.y + dy),
    )


def segment_intersection(s1: Segment, s2: Segment) -> tuple[Point | None, bool]:
    """Intersection of two closed segments.

    Returns ``(point, False)`` for a unique contact point (transversal or an
    endpoint touch), ``(None, True)`` when the segments share a collinear
    sub-segment of positive length, and ``(None, False)`` when disjoint.
    """
    ax, ay = s1.a.x, s1.a.y
    rx, ry = s1.b.x - ax, s1.b.y - ay
    qx, qy = s2.a.x, s2.a.y
    sx, sy = s2.b.x - qx, s2.b.y - qy
    scale = _extent(ax, ay, s1.b.x, s1.b.y, qx, qy, s2.b.x, s2.b.y)
    eps_len = REL_EPS * scale
    len_r = math.hypot(rx, ry)
    len_s = math.hypot(sx, sy)
    # segments shorter than the working tolerance behave as points
    if len_r <= eps_len or len_s <= eps_len:
        if len_r <= eps_len and len_s <= eps_len:
            hit = math.hypot(ax - qx, ay - qy) <= eps_len
            return (s1.a, False) if hit else (None, False)
        if len_r <= eps_len:
            hit = point_segment_distance(s1.a, s2) <= eps_len
            return (s1.a, False) if hit else (None, False)
        hit = point_segment_distance(s2.a, s1) <= eps_len
        return (s2.a, False) if hit else (None, False)
    den = rx * sy - ry * sx
    dqx, dqy = qx - ax, qy - ay
    if abs(den) <= REL_EPS * len_r * len_s:
        # parallel; collinear iff s2.a sits on the supporting line of s1
        if abs(dqx * ry - dqy * rx) > eps_len * len_r:
            return None, False
        rr = rx * rx + ry * ry
        t0 = (dqx * rx + dqy * ry) / rr
        t1 = t0 + (sx * rx + sy * ry) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        ov_lo, ov_hi = max(0.0, lo), min(1.0, hi)
        tol_t = eps_len / len_r
        if ov_hi < ov_lo - tol_t:
            return None, False
        if ov_hi - ov_lo <= tol_t:  # endpoint-to-endpoint touch
            t = min(1.0, max(0.0, (ov_lo + ov_hi) / 2))
            return Point(ax + t * rx, ay + t * ry), False
        return None, True
    t = (dqx * sy - dqy * sx) / den
    u = (dqx * ry - dqy * rx) / den
    tol_t = eps_len / len_r
    tol_u = eps_len / len_s
    if -tol_t <= t <= 1 + tol_t and -tol_u <= u <= 1 + tol_u:
        t = min(1.0, max(0.0, t))
        return Point(ax + t * rx, ay + t * ry), False
    return None, False


def segment_circle_intersections(
    s: Segment, center: Point, radius: float
) -> list[Point]:
    """Points of the closed segment on the circle, sorted along the segment.

    A tangential contact (within tolerance) counts as one point.
    """
    if radius <= 0:
        raise GeometryError(f"circle radius must be positive, got {radius}")
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    fx, fy = s.a.x - center.x, s.a.y - center.y
    aa = dx * dx + dy * dy
    bb = 2 * (fx * dx + fy * dy)
    cc = fx * fx + fy * fy - radius * radius
    scale = _extent(radius, fx, fy, math.sqrt(aa))
    if math.sqrt(aa) <= REL_EPS * scale:  # point-like at working tolerance
        on = abs(math.hypot(fx, fy) - radius) <= REL_EPS * scale
        return [s.a] if on else []
    disc = bb * bb - 4 * aa * cc
    disc_tol = 4 * aa * (REL_EPS * scale) ** 2
    if disc < -disc_tol:
        return []
    tol_t = REL_EPS * scale / math.sqrt(aa)
    if disc <= disc_tol:
        roots = [-bb / (2 * aa)]
    else:
        sq = math.sqrt(disc)
        roots = sorted([(-bb - sq) / (2 * aa), (-bb + sq) / (2 * aa)])
        if roots[1] - roots[0] <= tol_t:
            roots = [(roots[0] + roots[1]) / 2]
    out = []
    for t in roots:
        if -tol_t <= t <= 1 + tol_t:
            t = min(1.0, max(0.0, t))
            out.append(Point(s.a.x + t * dx, s.a.y + t * dy))
    return out


def clip_segment_to_box(s: Segment, b: Box) -> Segment | None:
    """Liang-Barsky clip of the closed segment to the closed box.

    Returns the positive-length intersection, or None (single-point contacts
    count as empty).
    """
    ax, ay = s.a.x, s.a.y
    dx, dy = s.b.x - ax, s.b.y - ay
    eps_len = REL_EPS * max(b.diagonal(), 1.0)
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, ax - b.min.x),
        (dx, b.max.x - ax),
        (-dy, ay - b.min.y),
        (dy, b.max.y - ay),
    ):
        if p == 0.0:
            if q < -eps_len:
                return None
            continue
        r = q / p
        if p < 0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    seg_len = math.hypot(dx, dy)
    if (t1 - t0) * seg_len <= eps_len:
        return None
    return Segment(
        Point(ax + t0 * dx, ay + t0 * dy), Point(ax + t1 * dx, ay + t1 * dy)
    )


def point_segment_distance(p: Point, s: Segment) -> float:
    px, py = p.x - s.a.x, p.y - s.a.y
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    dd = dx * dx + dy * dy
    t = (px * dx + py * dy) / dd if dd > 0 else 0.0
    t = min(1.0, max(0.0, t))
    return math.hypot(px - t * dx, py - t * dy)


# ---------------------------------------------------------------------------
# vectorized kit (private): segments are (n, 4) arrays [x1, y1, x2, y2]


def segments_array(segments: Iterable[Segment]) -> np.ndarray:
    return np.asarray(
        [(s.a.x, s.a.y, s.b.x, s.b.y) for s in segments], dtype=float
    ).reshape(-1, 4)


def sticks_to_segments(sticks: Sequence[Stick] | np.ndarray) -> np.ndarray:
    """(n, 4) endpoint array from Stick objects or an (n, 4) [cx, cy, r, v] array."""
    if isinstance(sticks, np.ndarray):
        arr = np.asarray(sticks, dtype=float).reshape(-1, 4)
        cx, cy, r, v = arr.T
    else:
        cx = np.array([s.center.x for s in sticks], dtype=float)
        cy = np.array([s.center.y for s in sticks], dtype=float)
        r = np.array([s.radius for s in sticks], dtype=float)
        v = np.array([s.direction for s in sticks], dtype=float)
    dx = r * np.cos(v)
    dy = r * np.sin(v)
    return np.column_stack([cx - dx, cy - dy, cx + dx, cy + dy])


def radial_interval(segs: np.ndarray, cx: float, cy: float):
    """Per-segment (min, max) distance from (cx, cy) to the closed segment."""
    ax = segs[:, 0] - cx
    ay = segs[:, 1] - cy
    bx = segs[:, 2] - cx
    by = segs[:, 3] - cy
    dx = bx - ax
    dy = by - ay
    dd = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(dd > 0, -(ax * dx + ay * dy) / dd, 0.0)
    t = np.clip(t, 0.0, 1.0)
    dmin = np.hypot(ax + t * dx, ay + t * dy)
    dmax = np.maximum(np.hypot(ax, ay), np.hypot(bx, by))
    return dmin, dmax


def batch_clip_to_box(segs: np.ndarray, b: Box):
    """Vectorized Liang-Barsky clip.

    Returns (keep_mask, clipped (m, 4) array) where m = keep_mask.sum(); order
    of the kept rows follows the input order.
    """
    ax, ay = segs[:, 0], segs[:, 1]
    dx, dy = segs[:, 2] - ax, segs[:, 3] - ay
    eps_len = REL_EPS * max(b.diagonal(), 1.0)
    t0 = np.zeros(len(segs))
    t1 = np.ones(len(segs))
    keep = np.ones(len(segs), dtype=bool)
    for p, q in (
        (-dx, ax - b.min.x),
        (dx, b.max.x - ax),
        (-dy, ay - b.min.y),
        (dy, b.max.y - ay),
    ):
        par = p == 0.0
        keep &= ~(par & (q < -eps_len))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(par, 0.0, q / np.where(par, 1.0, p))
        neg = (~par) & (p < 0)
        pos = (~par) & (p > 0)
        t0 = np.where(neg, np.maximum(t0, r), t0)
        t1 = np.where(pos, np.minimum(t1, r), t1)
    seg_len = np.hypot(dx, dy)
    keep &= (t1 - t0) * seg_len > eps_len
    out = np.column_stack(
        [ax + t0 * dx, ay + t0 * dy, ax + t1 * dx, ay + t1 * dy]
    )[keep]
    return keep, out


def _concat_ranges(lengths: np.ndarray) -> np.ndarray:
    """[0..l0), [0..l1), ... concatenated (standard grouped-arange recipe)."""
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    starts = np.cumsum(lengths) - lengths
    return np.arange(total, dtype=np.int64) - np.repeat(starts, lengths)


def _supercover_cells(segs: np.ndarray, cell: float, x0: float, y0: float):
    """Grid cells traversed by each segment (Amanatides-Woo, lockstep).

    Returns (keys, ids): int64 cell keys and the owning segment index.
    """
    n = len(segs)
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    x1 = (segs[:, 0] - x0) / cell
    y1 = (segs[:, 1] - y0) / cell
    x2 = (segs[:, 2] - x0) / cell
    y2 = (segs[:, 3] - y0) / cell
    ix = np.floor(x1).astype(np.int64)
    iy = np.floor(y1).astype(np.int64)
    jx = np.floor(x2).astype(np.int64)
    jy = np.floor(y2).astype(np.int64)
    dx = x2 - x1
    dy = y2 - y1
    stepx = np.sign(dx).astype(np.int64)
    stepy = np.sign(dy).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_dx = np.where(dx != 0, 1.0 / np.where(dx != 0, dx, 1.0), np.inf)
        inv_dy = np.where(dy != 0, 1.0 / np.where(dy != 0, dy, 1.0), np.inf)
        tmaxx = np.where(
            dx != 0, (ix + (stepx > 0).astype(float) - x1) * inv_dx, np.inf
        )
        tmaxy = np.where(
            dy != 0, (iy + (stepy > 0).astype(float) - y1) * inv_dy, np.inf
        )
    tdx = np.abs(inv_dx)
    tdy = np.abs(inv_dy)

    ids_parts = []
    keys_parts = []
    active = np.ones(n, dtype=bool)
    STRIDE = np.int64(1) << 31
    max_steps = int(np.max(np.abs(jx - ix) + np.abs(jy - iy))) + 1
    for _ in range(max_steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        keys_parts.append(ix[idx] * STRIDE + iy[idx])
        ids_parts.append(idx)
        done = (ix[idx] == jx[idx]) & (iy[idx] == jy[idx])
        active[idx[done]] = False
        go = idx[~done]
        if go.size == 0:
            break
        move_x = tmaxx[go] <= tmaxy[go]
        gx = go[move_x]
        gy = go[~move_x]
        ix[gx] += stepx[gx]
        tmaxx[gx] += tdx[gx]
        iy[gy] += stepy[gy]
        tmaxy[gy] += tdy[gy]
    return np.concatenate(keys_parts), np.concatenate(ids_parts)


def candidate_pairs(segs: np.ndarray, cell: float | None = None):
    """Index pairs (i < j) whose segments share a grid cell.

    Grid cell size defaults to the median segment length; all-pairs under 200
    segments.  A superset of the truly intersecting pairs.
    """
    n = len(segs)
    if n < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    if n <= 200:
        return np.triu_indices(n, k=1)
    lengths = np.hypot(segs[:, 2] - segs[:, 0], segs[:, 3] - segs[:, 1])
    if cell is None:
        span = max(
            segs[:, [0, 2]].max() - segs[:, [0, 2]].min(),
            segs[:, [1, 3]].max() - segs[:, [1, 3]].min(),
            1e-12,
        )
        cell = float(np.median(lengths))
        cell = min(max(cell, span / 4096.0), span / 4.0)
    x0 = float(min(segs[:, 0].min(), segs[:, 2].min()))
    y0 = float(min(segs[:, 1].min(), segs[:, 3].min()))
    keys, ids = _supercover_cells(segs, cell, x0, y0)
    order = np.lexsort((ids, keys))
    k = keys[order]
    v = ids[order]
    new_group = np.r_[True, k[1:] != k[:-1]]
    starts = np.flatnonzero(new_group)
    counts = np.diff(np.r_[starts, len(k)])
    grp = np.repeat(np.arange(len(counts)), counts)
    within = np.arange(len(k), dtype=np.int64) - starts[grp]
    j_side = np.repeat(np.arange(len(k), dtype=np.int64), within)
    i_side = np.repeat(starts[grp], within) + _concat_ranges(within)
    raw_i = v[i_side]
    raw_j = v[j_side]
    lo = np.minimum(raw_i, raw_j)
    hi = np.maximum(raw_i, raw_j)
    uniq = np.unique(lo * np.int64(n) + hi)
    return uniq // n, uniq % n


def batch_pair_intersections(segs: np.ndarray, I: np.ndarray, J: np.ndarray,
                             eps_len: float):
    """Closed-segment intersection test for candidate index pairs.

    Returns (hits, px, py, overlap); ``hits`` marks pairs meeting in at least
    one point, ``overlap`` the collinear positive-length sharings (for which
    px, py hold a point of the shared part).
    """
    if len(I) == 0:
        z = np.empty(0)
        return np.empty(0, dtype=bool), z, z, np.empty(0, dtype=bool)
    ax, ay = segs[I, 0], segs[I, 1]
    rx, ry = segs[I, 2] - ax, segs[I, 3] - ay
    qx, qy = segs[J, 0], segs[J, 1]
    sx, sy = segs[J, 2] - qx, segs[J, 3] - qy
    len_r = np.hypot(rx, ry)
    len_s = np.hypot(sx, sy)
    den = rx * sy - ry * sx
    dqx, dqy = qx - ax, qy - ay
    par = np.abs(den) <= REL_EPS * len_r * len_s
    safe_den = np.where(par, 1.0, den)
    t = (dqx * sy - dqy * sx) / safe_den
    u = (dqx * ry - dqy * rx) / safe_den
    tol_t = eps_len / len_r
    tol_u = eps_len / len_s
    cross_hit = (
        ~par
        & (t >= -tol_t)
        & (t <= 1 + tol_t)
        & (u >= -tol_u)
        & (u <= 1 + tol_u)
    )
    tc = np.where(cross_hit, t, 0.0)
    overlap = np.zeros(len(I), dtype=bool)
    hits = cross_hit
    if np.any(par):
        # collinear handling on the (rare) parallel subset only
        p = np.flatnonzero(par)
        col = np.abs(dqx[p] * ry[p] - dqy[p] * rx[p]) <= eps_len * len_r[p]
        rr = rx[p] ** 2 + ry[p] ** 2
        t0 = (dqx[p] * rx[p] + dqy[p] * ry[p]) / rr
        t1 = t0 + (sx[p] * rx[p] + sy[p] * ry[p]) / rr
        ov_lo = np.maximum(0.0, np.minimum(t0, t1))
        ov_hi = np.minimum(1.0, np.maximum(t0, t1))
        touch = col & (ov_hi >= ov_lo - tol_t[p]) & (ov_hi - ov_lo <= tol_t[p])
        over = col & (ov_hi - ov_lo > tol_t[p])
        overlap[p] = over
        hits = hits.copy()
        hits[p[touch | over]] = True
        tc[p] = np.clip((ov_lo + ov_hi) / 2, 0.0, 1.0)
    tc = np.clip(tc, 0.0, 1.0)
    px = ax + tc * rx
    py = ay + tc * ry
    return hits, px, py, overlap
