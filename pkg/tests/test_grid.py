import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saw.grid import Grid, GridSet, area, grid_box, grids_overlapping
from saw.interval import Box
from saw.model import parse_model

from conftest import bench


def line_model(p=4):
    return parse_model(f"1 0 {p}\nx\n0\n1 0.5\n0 1\n-1 1\n-1 1\n")


def plane_model(p, lo=-1.0, hi=1.0):
    return parse_model(f"2 0 {p}\nx y\n0\n0\n1 0.5\n0 1\n{lo} {hi}\n{lo} {hi}\n{lo} {hi}\n{lo} {hi}\n")


def test_grid_box_examples():
    assert grid_box(line_model(), 0) == Box((-1.0,), (-0.5,))
    b = grid_box(bench(1), 0)
    assert b.lo == (-3.0, -3.0) and b.hi == pytest.approx((-2.88, -2.88))
    g = Grid(Box.from_bounds([(0, 1), (0, 1)]), 3)
    assert g.flat_index((2, 1)) == 7
    assert tuple(g.multi_index(7)) == (2, 1)


def test_last_cell_ends_exactly_at_safe_bound():
    m = bench(1)
    g = Grid.of(m)
    assert grid_box(m, g.size - 1).hi == (3.0, 3.0)


def test_overlap_examples():
    m = line_model()
    s, out = grids_overlapping(m, Box((-0.6,), (-0.4,)))
    assert set(s) == {0, 1} and not out
    s, out = grids_overlapping(m, Box((2.0,), (3.0,)))
    assert len(s) == 0 and out
    # a cell's own box also meets every face-touching neighbour
    pm = plane_model(3)
    s, _ = grids_overlapping(pm, grid_box(pm, 4))
    assert set(s) == set(range(9))


def test_area_examples():
    m = bench(1)
    g = Grid.of(m)
    assert area(m, GridSet(g.size)) == 0
    assert area(m, GridSet.full(g.size)) == pytest.approx(36.0)


def brute_overlap(model, box):
    g = Grid.of(model)
    return {v for v in range(g.size) if grid_box(model, v).intersects(box)}


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 20), st.integers(1, 2), st.data())
def test_overlap_matches_brute_force(p, d, data):
    model = line_model(p) if d == 1 else plane_model(p)
    pts = st.floats(-1.5, 1.5)
    # snap some coordinates onto grid faces to exercise the boundary case
    faces = st.integers(0, p).map(lambda i: -1 + 2 * i / p)
    coord = st.one_of(pts, faces)
    lo, hi = [], []
    for _ in range(d):
        a, b = sorted((data.draw(coord), data.draw(coord)))
        lo.append(a)
        hi.append(b)
    box = Box(tuple(lo), tuple(hi))
    s, out = grids_overlapping(model, box)
    assert set(s) == brute_overlap(model, box)
    assert out == (not box.issubset(model.safe))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_partition_exactness(p, x):
    g = Grid.of(plane_model(p))
    lo, hi = g.cell_bounds
    inside = np.all((lo < x) & (np.asarray(x) < hi), axis=1)
    closed = np.all((lo <= x) & (np.asarray(x) <= hi), axis=1)
    on_face = np.any(np.isclose(np.asarray(x)[None, :], lo) | np.isclose(np.asarray(x)[None, :], hi))
    assert closed.sum() >= 1
    if not on_face:
        assert inside.sum() == 1


def test_cover_ranges_ignores_grazing_contact():
    g = Grid(Box.from_bounds([(-1, 1)]), 4, margin=1e-9)
    # touches the face at -0.5 and overlaps the next cell by 1e-12
    first, last, _ = g.cover_ranges(np.array([[-0.5 - 1e-12]]), np.array([[0.0]]))
    assert (first[0, 0], last[0, 0]) == (1, 1)
    strict = Grid(Box.from_bounds([(-1, 1)]), 4, margin=0.0)
    first, last, _ = strict.cover_ranges(np.array([[-0.5 - 1e-12]]), np.array([[0.0]]))
    assert (first[0, 0], last[0, 0]) == (0, 1)
    first, last, _ = strict.cover_ranges(np.array([[-0.5]]), np.array([[0.0]]))
    assert (first[0, 0], last[0, 0]) == (1, 1)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 16), st.floats(-1, 1), st.floats(0, 1))
def test_strict_cover_covers_box(p, a, w):
    g = Grid(Box.from_bounds([(-1, 1)]), p, margin=0.0)
    b = min(a + w, 1.0)
    first, last, _ = g.cover_ranges(np.array([[a]]), np.array([[b]]))
    assert g.edges[0, first[0, 0]] <= a and b <= g.edges[0, last[0, 0] + 1]


def test_gridset_algebra():
    a = GridSet.from_indices(100, [1, 5, 64, 99])
    b = GridSet.from_indices(100, [5, 64, 70])
    assert set(a | b) == {1, 5, 64, 70, 99}
    assert set(a & b) == {5, 64}
    assert set(a - b) == {1, 99}
    assert len(a.complement()) == 96
    assert (a & b) <= a and not a <= b
    assert 64 in a and 63 not in a and 1000 not in a
    assert a == GridSet.from_mask(a.to_mask())
    with pytest.raises(IndexError):
        GridSet.from_indices(10, [10])


@given(st.sets(st.integers(0, 199)), st.sets(st.integers(0, 199)))
def test_gridset_matches_python_sets(x, y):
    a, b = GridSet.from_indices(200, x), GridSet.from_indices(200, y)
    assert set(a | b) == x | y and set(a & b) == x & y and set(a - b) == x - y
    assert len(a) == len(x)
