"""Scanline polygon fill and polygon simplicity checks.

Cell ``(row, col)`` is sampled at its center, taken as the point
``(x=col, y=row)``. A cell is set when its center is inside the polygon under
the even-odd rule, or lies exactly on an edge.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import DegeneratePolygonError


def distinct_vertices(vertices: np.ndarray) -> int:
    return len({(float(x), float(y)) for x, y in vertices})


def _edge_crossings(vertices: np.ndarray, y: float) -> list[float]:
    """x positions where the edges cross the horizontal line at ``y``.

    Half-open rule: an edge counts when exactly one endpoint is above ``y``,
    so vertices are never double counted and horizontal edges never count.
    """
    xs = []
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i - 1]
        x2, y2 = vertices[i]
        if (y1 > y) != (y2 > y):
            xs.append(x1 + (y - y1) * (x2 - x1) / (y2 - y1))
    xs.sort()
    return xs


def _on_segment_exact(px: int, py: int, a, b) -> bool:
    ax, ay, bx, by = (Fraction(float(v)) for v in (a[0], a[1], b[0], b[1]))
    if (bx - ax) * (py - ay) != (by - ay) * (px - ax):
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def _mark_edge_cells(mask: np.ndarray, a, b) -> None:
    """Set every cell whose center lies exactly on segment ``a``-``b``."""
    height, width = mask.shape
    x1, y1 = float(a[0]), float(a[1])
    x2, y2 = float(b[0]), float(b[1])
    if y1 == y2:
        if y1 != int(y1) or not 0 <= y1 < height:
            return
        lo, hi = max(math.ceil(min(x1, x2)), 0), min(math.floor(max(x1, x2)), width - 1)
        if lo <= hi:
            mask[int(y1), lo : hi + 1] = 1
        return
    row_lo = max(math.ceil(min(y1, y2)), 0)
    row_hi = min(math.floor(max(y1, y2)), height - 1)
    for row in range(row_lo, row_hi + 1):
        x = x1 + (row - y1) * (x2 - x1) / (y2 - y1)
        col = int(round(x))
        if abs(x - col) > 1e-6 or not 0 <= col < width:
            continue
        if _on_segment_exact(col, row, a, b):
            mask[row, col] = 1


def scanline_fill(vertices, height: int, width: int) -> np.ndarray:
    """Rasterize a closed polygon into a ``height x width`` uint8 {0,1} grid."""
    if height <= 0 or width <= 0:
        raise ValueError(f"grid must be non-empty, got {height}x{width}")
    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if distinct_vertices(verts) < 3:
        raise DegeneratePolygonError(
            f"polygon needs at least 3 distinct vertices, got {distinct_vertices(verts)}"
        )
    mask = np.zeros((height, width), dtype=np.uint8)
    row_lo = max(math.ceil(verts[:, 1].min()), 0)
    row_hi = min(math.floor(verts[:, 1].max()), height - 1)
    for row in range(row_lo, row_hi + 1):
        xs = _edge_crossings(verts, float(row))
        for left, right in zip(xs[0::2], xs[1::2]):
            # integer x with left <= x < right
            start = max(math.ceil(left), 0)
            stop = min(math.ceil(right), width)
            if start < stop:
                mask[row, start:stop] = 1
    n = len(verts)
    for i in range(n):
        _mark_edge_cells(mask, verts[i - 1], verts[i])
    return mask


# --------------------------------------------------------------------------
# simplicity


def _orient(p, q, r) -> int:
    v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (v > 0) - (v < 0)


def _within(p, q, r) -> bool:
    return min(p[0], r[0]) <= q[0] <= max(p[0], r[0]) and min(p[1], r[1]) <= q[1] <= max(
        p[1], r[1]
    )


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection test, including touching and overlap."""
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _within(p1, q1, p2):
        return True
    if o2 == 0 and _within(p1, q2, p2):
        return True
    if o3 == 0 and _within(q1, p1, q2):
        return True
    return o4 == 0 and _within(q1, p2, q2)


def is_simple_polygon(vertices) -> bool:
    """True when no two non-adjacent edges meet and no vertex repeats."""
    pts = [(Fraction(float(x)), Fraction(float(y))) for x, y in np.asarray(vertices).reshape(-1, 2)]
    n = len(pts)
    if n < 3 or len(set(pts)) != n:
        return False
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent edges share a vertex by construction; only a collinear fold-back is illegal
                a, b = edges[i], edges[j]
                shared = a[1] if j == i + 1 else a[0]
                other_a = a[0] if j == i + 1 else a[1]
                other_b = b[1] if j == i + 1 else b[0]
                if _orient(other_a, shared, other_b) == 0 and (
                    _within(shared, other_b, other_a) or _within(shared, other_a, other_b)
                ):
                    return False
                continue
            if segments_intersect(*edges[i], *edges[j]):
                return False
    return True
