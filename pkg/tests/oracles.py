"""Brute-force reference implementations used only by the tests.

Everything here uses exact rational arithmetic and shares no code with the
package under test.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np


def _exact(vertices):
    return [(Fraction(float(x)), Fraction(float(y))) for x, y in np.asarray(vertices).reshape(-1, 2)]


def _scaled_ints(vertices):
    """Exact integer coordinates: every vertex times one common power of two."""
    fr = _exact(vertices)
    denom = 1
    for x, y in fr:
        denom = max(denom, x.denominator, y.denominator)  # denominators are powers of two
    return [(int(x * denom), int(y * denom)) for x, y in fr], denom


def point_on_edge(px, py, a, b) -> bool:
    cross = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
    if cross != 0:
        return False
    return min(a[0], b[0]) <= px <= max(a[0], b[0]) and min(a[1], b[1]) <= py <= max(a[1], b[1])


def point_in_polygon(px, py, vertices) -> bool:
    """Even-odd ray cast toward +x; points on an edge count as inside."""
    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    scaled, _ = _scaled_ints(np.vstack([verts, [[px, py]]]))
    return _inside_int(*scaled[-1], scaled[:-1])


def _inside_int(px, py, poly) -> bool:
    n = len(poly)
    for i in range(n):
        if point_on_edge(px, py, poly[i], poly[(i + 1) % n]):
            return True
    inside = False
    for i in range(n):
        (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            # px < x1 + (py - y1) * (x2 - x1) / (y2 - y1), multiplied through by (y2 - y1)
            lhs = (px - x1) * (y2 - y1)
            rhs = (py - y1) * (x2 - x1)
            if (lhs < rhs) if y2 > y1 else (lhs > rhs):
                inside = not inside
    return inside


def cells_inside(vertices, rows, cols) -> np.ndarray:
    """Oracle verdict for many integer cells (r, c) against one polygon."""
    poly, denom = _scaled_ints(vertices)
    return np.array([_inside_int(int(c) * denom, int(r) * denom, poly) for r, c in zip(rows, cols)], dtype=bool)


def brute_force_mask(vertices, height, width) -> np.ndarray:
    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    poly, denom = _scaled_ints(verts)
    xmin, ymin = verts.min(axis=0)
    xmax, ymax = verts.max(axis=0)
    out = np.zeros((height, width), dtype=np.uint8)
    for r in range(height):
        if not ymin <= r <= ymax:
            continue
        for c in range(width):
            if xmin <= c <= xmax:
                out[r, c] = _inside_int(c * denom, r * denom, poly)
    return out


def _orient(p, q, r):
    v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (v > 0) - (v < 0)


def _closed_segments_meet(p1, p2, q1, q2) -> bool:
    d1, d2 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    d3, d4 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return (
        (d1 == 0 and point_on_edge(p1[0], p1[1], q1, q2))
        or (d2 == 0 and point_on_edge(p2[0], p2[1], q1, q2))
        or (d3 == 0 and point_on_edge(q1[0], q1[1], p1, p2))
        or (d4 == 0 and point_on_edge(q2[0], q2[1], p1, p2))
    )


def polygon_is_simple(vertices) -> bool:
    """O(n^2) pairwise check: non-adjacent edges must not meet at all;
    adjacent edges may only share their common vertex."""
    poly = _exact(vertices)
    n = len(poly)
    if n < 3 or len(set(poly)) != n:
        return False
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i, j in combinations(range(n), 2):
        (a1, a2), (b1, b2) = edges[i], edges[j]
        if j == i + 1 or (i == 0 and j == n - 1):
            if j == i + 1:
                p, s, q = a1, a2, b2
            else:
                p, s, q = a2, a1, b1
            # only the shared vertex may be common: reject fold-backs
            if _orient(p, s, q) == 0 and (point_on_edge(q[0], q[1], s, p) or point_on_edge(p[0], p[1], s, q)):
                return False
            continue
        if _closed_segments_meet(a1, a2, b1, b2):
            return False
    return True


def random_simple_polygon(rng: np.random.Generator, n: int, height: int, width: int, grid: float | None = None):
    """Star-shaped polygon: sorted angles around a center, random radii.

    ``grid`` snaps vertices to multiples of that step (1 gives integer
    vertices); the result is re-drawn until it is simple.
    The returned polygon may have fewer than ``n`` vertices when the grid is
    too coarse to fit ``n`` in a simple polygon.
    """
    for attempt in range(400):
        # keep asking for fewer vertices when a coarse grid cannot fit them
        k = max(3, n - attempt // 20)
        cx, cy = rng.uniform(0.3, 0.7) * (width - 1), rng.uniform(0.3, 0.7) * (height - 1)
        angles = np.sort(rng.uniform(0, 2 * np.pi, k))
        rmax = min(cx, cy, width - 1 - cx, height - 1 - cy)
        radii = rng.uniform(0.2, 1.0, k) * rmax
        pts = np.stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)], axis=1)
        if grid:
            pts = np.rint(pts / grid) * grid
        if polygon_is_simple(pts):
            return pts
    raise RuntimeError(f"no simple {n}-gon found on a {height}x{width} grid")
