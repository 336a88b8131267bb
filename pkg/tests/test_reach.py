import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from saw.grid import Grid
from saw.interval import Box, Interval
from saw.model import parse_model
from saw.oracle import Simulator
from saw.reach import (EnclosureError, Reach, apriori_enclosure, control_input, flowpipe,
                       lie_derivatives, taylor_step)
from saw.expr import eval_real, parse_expr

from conftest import bench


def scalar(ode, lo=-10, hi=10, period=0.2, step=0.1, law=None):
    if law is None:
        return parse_model(f"1 0 4\nx\n{ode}\n{period} {step}\n0 1\n{lo} {hi}\n{lo} {hi}\n")
    return parse_model(f"1 1 4\nx u\n{ode}\n{law}\n{period} {step}\n0 1\n{lo} {hi}\n{lo} {hi}\n")


def box(*sides):
    return Box.from_bounds(sides)


# -- control input ------------------------------------------------------------

def test_control_input_examples():
    u = control_input(bench(1), box((-1, 1), (-1, 1)))
    assert u[0].lo <= -1.525 and u[0].hi >= 1.525
    assert control_input(scalar("-1 * x"), box((0, 1))) == []
    m = scalar("x + u", law="x")
    u = control_input(m, box((2, 3)))
    assert (u[0].lo, u[0].hi) == (2, 3)


# -- a-priori enclosure ---------------------------------------------------------

def test_apriori_stationary():
    B = apriori_enclosure(scalar("0"), box((0.5, 0.6)), [], 0.1)
    assert B.lo[0] <= 0.5 and B.hi[0] >= 0.6


def test_apriori_decay():
    B = apriori_enclosure(scalar("-1 * x"), box((1, 2)), [], 0.1)
    assert B.lo[0] <= 0.8 and B.hi[0] >= 2
    # the returned box passes the Picard test
    assert B.lo[0] <= 1 - 0.1 * B.hi[0] and B.hi[0] >= 2


def test_apriori_blowup_fails():
    with pytest.raises(EnclosureError):
        apriori_enclosure(scalar("x^2", lo=-1000, hi=1000), box((100, 100)), [], 1)


def test_apriori_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        apriori_enclosure(scalar("0"), box((0, 1)), [], 0)


# -- Taylor step --------------------------------------------------------------

def test_taylor_stationary():
    for order in (1, 2, 4, 6):
        seg, end = taylor_step(scalar("0"), box((0.5, 0.6)), [], 0.1, order)
        assert end == box((0.5, 0.6))


def test_taylor_decay_point():
    seg, end = taylor_step(scalar("-1 * x"), box((1, 1)), [], 0.1, 4)
    assert end.lo[0] <= math.exp(-0.1) <= end.hi[0]
    assert end.hi[0] - end.lo[0] <= 1e-5


def test_taylor_decay_box():
    seg, end = taylor_step(scalar("-1 * x"), box((1, 2)), [], 0.2, 4)
    assert end.lo[0] <= math.exp(-0.2) and end.hi[0] >= 2 * math.exp(-0.2)
    assert seg.lo[0] <= end.lo[0] and seg.hi[0] >= 2


def test_lie_derivatives_of_linear_decay():
    L = lie_derivatives([parse_expr("-1 * x", ["x"])], 1, 3)
    for k in range(4):
        assert eval_real(L[k][0], [2.0]) == pytest.approx((-1) ** k * 2.0)


# -- flowpipes ----------------------------------------------------------------

def test_flowpipe_stationary():
    m = parse_model("1 1 4\nx u\n0 * u\nx\n0.2 0.01\n1 2\n0 1\n0 1\n")
    for e in (0, 1):
        fp = flowpipe(m, box((0.5, 0.6)), e)
        assert len(fp.segments) == 20
        assert all(s == box((0.5, 0.6)) for s in fp.segments)
        assert fp.end_box == box((0.5, 0.6))


def test_segments_tile_the_period():
    m = bench(1)
    fp = flowpipe(m, Grid.of(m).cell_box(1234), 0)
    assert fp.times[0][0] == 0 and fp.times[-1][1] == Fraction(m.period)
    for (a, b), (c, _) in zip(fp.times, fp.times[1:]):
        assert b == c
    widths = {b - a for a, b in fp.times}
    assert len(widths) == 1  # delta / h is an integer here, so all steps are delta / 20
    assert float(widths.pop()) == pytest.approx(m.step_size, rel=1e-9)
    assert fp.end_box.issubset(fp.segments[-1])


def test_flowpipe_rejects_bad_event():
    with pytest.raises(ValueError):
        flowpipe(bench(1), box((0, 0.1), (0, 0.1)), 2)


def period_map_linear(meet: bool, delta=0.2):
    """Exact period map of benchmark #1: x(delta) = P x0."""
    A = np.array([[0.0, 1.0], [0.0, -0.1]])
    B = np.array([[0.0], [1.0]])
    Kc = np.array([[-0.375, -1.15]])
    E = expm(np.block([[A, B], [np.zeros((1, 3))]]) * delta)
    Phi, G = E[:2, :2], E[:2, 2:]
    return Phi + G @ Kc if meet else Phi


def _cells(model, cells):
    lo, hi = Grid.of(model).cell_bounds
    return lo[cells], hi[cells]


@pytest.mark.parametrize("e", [0, 1])
def test_benchmark1_end_box_contains_analytic_solution(e):
    m = bench(1)
    rng = np.random.default_rng(1)
    P = period_map_linear(e == 0)
    cells = rng.choice(Grid.of(m).size, 40, replace=False)
    lo, hi = _cells(m, cells)
    res = Reach(m).flowpipe_batch(lo, hi, e, keep_segments=False)
    assert res.ok.all()
    x0 = rng.uniform(np.repeat(lo, 100, 0), np.repeat(hi, 100, 0))
    x1 = x0 @ P.T
    owner = np.repeat(np.arange(cells.size), 100)
    assert np.all(x1 >= res.end_lo[owner] - 1e-12) and np.all(x1 <= res.end_hi[owner] + 1e-12)


def test_benchmark1_linear_tightness():
    m = bench(1)
    cells = np.arange(0, Grid.of(m).size, 7)
    lo, hi = _cells(m, cells)
    for e in (0, 1):
        P = period_map_linear(e == 0)
        exact = (hi - lo) @ np.abs(P).T  # widths of the exact image's box hull
        res = Reach(m).flowpipe_batch(lo, hi, e, keep_segments=False)
        assert np.all(res.end_hi - res.end_lo <= 1.5 * exact)


def _containment(model, cells, e, n_points, seed):
    g = Grid.of(model)
    lo, hi = g.cell_bounds
    lo, hi = lo[cells], hi[cells]
    res = Reach(model).flowpipe_batch(lo, hi, e)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(np.repeat(lo, n_points, 0), np.repeat(hi, n_points, 0))
    end, s_lo, s_hi = Simulator(model).period(x0, e)
    owner = np.repeat(np.arange(len(cells)), n_points)
    ok = res.ok[owner]
    tol = 1e-9  # accuracy of the floating-point oracle itself
    seg_in = np.all((s_lo >= res.seg_lo[:, owner] - tol) & (s_hi <= res.seg_hi[:, owner] + tol), axis=(0, 2))
    end_in = np.all((end >= res.end_lo[owner] - tol) & (end <= res.end_hi[owner] + tol), axis=1)
    return ok, seg_in, end_in


@pytest.mark.parametrize("n", [1, 5])
@pytest.mark.parametrize("e", [0, 1])
def test_flowpipe_contains_simulation_sample(n, e):
    m = bench(n)
    size = Grid.of(m).size
    cells = np.random.default_rng(n).choice(size, min(size, 60), replace=False)
    ok, seg_in, end_in = _containment(m, cells, e, 100, seed=e)
    assert np.all(seg_in[ok]) and np.all(end_in[ok])


def _nested_pairs(n, shrink, seed=0):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-2.5, 2.3, (n, 2))
    w = rng.uniform(0.01, 0.2, (n, 1))
    cut = w * shrink(rng, (n, 4)) / 2
    ilo = lo + cut[:, :2]
    ihi = lo + w - cut[:, 2:]
    return (lo, lo + w), (ilo, ihi)


def _excess(m, outer, inner, e):
    r = Reach(m)
    a = r.flowpipe_batch(*inner, e, keep_segments=False)
    b = r.flowpipe_batch(*outer, e, keep_segments=False)
    return np.maximum(b.end_lo - a.end_lo, a.end_hi - b.end_hi)


@pytest.mark.parametrize("e", [0, 1])
def test_monotone_for_strictly_nested_boxes(e):
    outer, inner = _nested_pairs(2000, lambda rng, s: rng.uniform(0.01, 1, s))
    assert np.all(_excess(bench(1), outer, inner, e) <= 0)


@pytest.mark.parametrize("e", [0, 1])
def test_monotone_up_to_rounding_when_faces_are_shared(e):
    outer, inner = _nested_pairs(2000, lambda rng, s: rng.integers(0, 2, s).astype(float))
    assert np.nanmax(_excess(bench(1), outer, inner, e)) <= 1e-12


@pytest.mark.xfail(strict=True, reason="enclosures of boxes sharing a face with the outer box "
                   "can exceed it by a few ulps (about 1e-14); exact inclusion is not guaranteed")
def test_monotone_exactly_when_faces_are_shared():
    outer, inner = _nested_pairs(2000, lambda rng, s: rng.integers(0, 2, s).astype(float))
    assert np.all(_excess(bench(1), outer, inner, 0) <= 0)


def test_flowpipe_deterministic():
    m = bench(5)
    g = Grid.of(m)
    lo, hi = g.cell_bounds
    r1 = Reach(m).flowpipe_batch(lo, hi, 0)
    r2 = Reach(m).flowpipe_batch(lo, hi, 0)
    parts = Reach(m).flowpipe_batch(lo[:37], hi[:37], 0)
    assert np.array_equal(r1.end_lo, r2.end_lo, equal_nan=True)
    assert np.array_equal(r1.end_lo[:37], parts.end_lo, equal_nan=True)
    assert np.array_equal(r1.seg_hi[:, :37], parts.seg_hi, equal_nan=True)


def test_decoupled_mode_encloses_coupled():
    m = bench(5)
    g = Grid.of(m)
    lo, hi = g.cell_bounds
    tight = Reach(m).flowpipe_batch(lo, hi, 0)
    loose = Reach(m, coupled=False).flowpipe_batch(lo, hi, 0)
    both = tight.ok & loose.ok
    # the two are different enclosures of the same set; they must overlap
    assert both.any()
    assert np.all(tight.end_lo[both] <= loose.end_hi[both])
    assert np.all(loose.end_lo[both] <= tight.end_hi[both])
