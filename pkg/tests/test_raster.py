import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskcut.errors import DegeneratePolygonError
from maskcut.raster import is_simple_polygon, scanline_fill, segments_intersect
from oracles import brute_force_mask, polygon_is_simple, random_simple_polygon


def test_rectangle_fill():
    mask = scanline_fill([(1, 1), (4, 1), (4, 4), (1, 4)], 6, 6)
    expected = np.zeros((6, 6), np.uint8)
    expected[1:5, 1:5] = 1
    assert np.array_equal(mask, expected)


def test_triangle_matches_oracle():
    tri = [(0, 0), (5, 0), (0, 5)]
    mask = scanline_fill(tri, 8, 8)
    assert np.array_equal(mask, brute_force_mask(tri, 8, 8))
    # hypotenuse cells (x + y == 5) are boundary cells and included
    assert mask[0, 5] == 1 and mask[5, 0] == 1 and mask[2, 3] == 1
    assert mask[3, 3] == 0


@pytest.mark.parametrize(
    "verts",
    [[(2, 2), (2, 2), (2, 2)], [(1, 1), (3, 3)], [(1, 1), (3, 3), (1, 1), (3, 3)]],
)
def test_degenerate_polygons(verts):
    with pytest.raises(DegeneratePolygonError):
        scanline_fill(verts, 6, 6)


def test_collinear_polygon_covers_its_segment():
    mask = scanline_fill([(0, 0), (2, 2), (4, 4)], 6, 6)
    assert np.array_equal(mask, brute_force_mask([(0, 0), (2, 2), (4, 4)], 6, 6))
    assert mask.sum() == 5


def test_concave_and_horizontal_edges():
    # a "U" shape with horizontal runs on the scanlines themselves
    u = [(0, 0), (2, 0), (2, 4), (5, 4), (5, 0), (7, 0), (7, 6), (0, 6)]
    assert np.array_equal(scanline_fill(u, 8, 9), brute_force_mask(u, 8, 9))


def test_self_intersecting_bowtie_uses_even_odd():
    bowtie = [(0, 0), (6, 6), (6, 0), (0, 6)]
    assert np.array_equal(scanline_fill(bowtie, 8, 8), brute_force_mask(bowtie, 8, 8))


@pytest.mark.parametrize("grid", [1.0, 0.5, 0.125])
def test_dyadic_vertices_match_oracle(rng, grid):
    for _ in range(15):
        poly = random_simple_polygon(rng, int(rng.integers(3, 29)), 40, 50, grid)
        assert np.array_equal(scanline_fill(poly, 40, 50), brute_force_mask(poly, 40, 50))


def test_arbitrary_float_vertices_match_oracle(rng):
    for _ in range(5):
        poly = random_simple_polygon(rng, int(rng.integers(3, 12)), 20, 20)
        assert np.array_equal(scanline_fill(poly, 20, 20), brute_force_mask(poly, 20, 20))


coord = st.integers(min_value=0, max_value=15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coord, coord), min_size=3, max_size=10))
def test_any_integer_polygon_matches_oracle(verts):
    if len(set(verts)) < 3:
        with pytest.raises(DegeneratePolygonError):
            scanline_fill(verts, 16, 16)
        return
    assert np.array_equal(scanline_fill(verts, 16, 16), brute_force_mask(verts, 16, 16))


def test_segments_intersect_cases():
    assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))
    assert segments_intersect((0, 0), (2, 0), (2, 0), (3, 1))  # touching endpoint
    assert segments_intersect((0, 0), (3, 0), (1, 0), (2, 0))  # overlap
    assert not segments_intersect((0, 0), (1, 0), (2, 0), (3, 0))
    assert not segments_intersect((0, 0), (1, 1), (1, 0), (2, 1))


def test_simplicity_checks_agree_with_oracle(rng):
    shapes = [
        [(0, 0), (4, 0), (4, 4), (0, 4)],
        [(0, 0), (4, 4), (4, 0), (0, 4)],
        [(0, 0), (4, 0), (2, 0), (2, 3)],  # fold-back
        [(0, 0), (4, 0), (4, 4), (2, 0), (0, 4)],  # vertex touches an edge
        [(0, 0), (4, 0), (0, 0), (0, 4)],
    ]
    for _ in range(30):
        shapes.append(rng.integers(0, 6, size=(int(rng.integers(3, 7)), 2)).tolist())
    for s in shapes:
        assert is_simple_polygon(s) == polygon_is_simple(s), s
