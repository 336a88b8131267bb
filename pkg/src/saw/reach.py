"""Validated one-period reachability with interval Taylor series.

Within a sampling period the control input is held constant (zero-order
hold): on a deadline meet it is the interval image of the control law over
the start box, on a miss it is zero. The period is cut into micro-steps; each
micro-step

1. finds an a-priori box ``B`` with ``X + [0, h] f(B, U) ⊆ B`` (Picard test),
2. encloses the state at time ``h`` by a Taylor polynomial built from
   symbolic Lie derivatives plus a Lagrange remainder evaluated over ``B``,
   using both the natural and the mean-value (centred) interval forms,
3. encloses the whole micro-step by the Taylor polynomial with an interval
   time variable, intersected with ``B``.

All arithmetic is outward rounded, so every box is a guaranteed enclosure.
Every routine works on batches: a box is a list of ``d`` intervals whose
bounds are arrays with one entry per start box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .expr import ZERO, Tape, Var, differentiate, s_add, s_mul, substitute
from .interval import Box, Interval, IntervalError
from .model import Model

DEFAULT_ORDER = 4
APRIORI_ITERATIONS = 20


class EnclosureError(ArithmeticError):
    """No validated enclosure could be established."""


@dataclass
class Flowpipe:
    times: list[tuple[Fraction, Fraction]]
    segments: list[Box]
    end_box: Box
    event: int

    def hull(self) -> Box:
        out = self.segments[0]
        for s in self.segments[1:]:
            out = out.hull(s)
        return out


@dataclass
class FlowpipeBatch:
    """Flowpipes for many start boxes at once.

    ``ok[b]`` is False when an enclosure failed or (if a safe box was given)
    the pipe left it; bounds of such entries are meaningless.
    """

    ok: np.ndarray
    left_safe: np.ndarray
    end_lo: np.ndarray
    end_hi: np.ndarray
    seg_lo: np.ndarray | None
    seg_hi: np.ndarray | None


def lie_derivatives(odes: Sequence, n_states: int, order: int) -> list[list]:
    """``L[k][i]``: k-th Lie derivative of state ``i`` along ``odes``.

    Input variables (indices >= n_states) are treated as constants.
    """
    L = [[Var(i) for i in range(n_states)]]
    for _ in range(order):
        nxt = []
        for g in L[-1]:
            acc = ZERO
            for j in range(n_states):
                acc = s_add(acc, s_mul(differentiate(g, j), odes[j]))
            nxt.append(acc)
        L.append(nxt)
    return L


def _slice(box, idx):
    return [Interval._raw(iv.lo[idx], iv.hi[idx]) for iv in box]


def _point(box):
    mids = [iv.mid for iv in box]
    return [Interval._raw(m, m) for m in mids], mids


def _broadcast(ivs, shape):
    return [Interval._raw(np.broadcast_to(iv.lo, shape).copy(), np.broadcast_to(iv.hi, shape).copy())
            for iv in ivs]


def _all_valid(ivs):
    ok = True
    for iv in ivs:
        ok = ok & iv.is_valid()
    return ok


class TaylorIntegrator:
    """Interval Taylor stepping for ``x' = f(x, u)`` with ``u`` held constant."""

    def __init__(self, odes: Sequence, n_states: int, n_inputs: int, order: int = DEFAULT_ORDER):
        if order < 1:
            raise ValueError("Taylor order must be at least 1")
        self.order = order
        self.d, self.q = n_states, n_inputs
        nv = n_states + n_inputs
        L = lie_derivatives(odes, n_states, order)
        self.f_tape = Tape(list(odes), nv)
        self.low_tape = Tape([L[k][i] for k in range(1, order) for i in range(n_states)], nv)
        self.jac_tape = Tape([differentiate(L[k][i], j)
                              for k in range(1, order) for i in range(n_states) for j in range(nv)], nv)
        self.rem_tape = Tape(L[order], nv)
        self._coeffs: dict[Fraction, list[Interval]] = {}

    def coefficients(self, h: Fraction) -> list[Interval]:
        """Enclosures of ``h**k / k!`` for ``k = 0..order``."""
        if h not in self._coeffs:
            self._coeffs[h] = [Interval.from_fraction(h ** k / math.factorial(k))
                               for k in range(self.order + 1)]
        return self._coeffs[h]

    def apriori(self, X, U, h: Fraction):
        c1 = self.coefficients(h)[1]
        span = Interval._raw(np.float64(0.0), c1.hi)
        eps = [0.1 * iv.width + 1e-4 for iv in X]
        B = [iv.inflate(e) for iv, e in zip(X, eps)]
        shape = np.shape(X[0].lo)
        done = np.zeros(shape, dtype=bool)
        out_lo = [np.full(shape, np.nan) for _ in X]
        out_hi = [np.full(shape, np.nan) for _ in X]
        for _ in range(APRIORI_ITERATIONS):
            F = self.f_tape.eval_interval(B + U)
            P = [x + span * f for x, f in zip(X, F)]
            inside = [p.is_valid() & p.subset_of(b) for p, b in zip(P, B)]
            fits = np.logical_and.reduce(inside)
            new = fits & ~done
            for i, p in enumerate(P):
                out_lo[i] = np.where(new, p.lo, out_lo[i])
                out_hi[i] = np.where(new, p.hi, out_hi[i])
            done |= fits
            if done.all():
                break
            # widen only the coordinates that did not fit
            eps = [np.where(ins, e, 2.0 * e) for e, ins in zip(eps, inside)]
            # next candidate: the Picard image, inflated; fall back to X where undefined
            seeds = [Interval._raw(np.where(np.isfinite(p.lo), p.lo, x.lo),
                                   np.where(np.isfinite(p.hi), p.hi, x.hi)) for p, x in zip(P, X)]
            B = [s.inflate(e) for s, e in zip(seeds, eps)]
        return [Interval._raw(lo, hi) for lo, hi in zip(out_lo, out_hi)], done

    def taylor(self, X, U, B, h: Fraction):
        """Whole-step and end-of-step enclosures given an a-priori box ``B``."""
        d, nv, N = self.d, self.d + self.q, self.order
        c = self.coefficients(h)
        V = X + U
        Vc, mids = _point(V)
        low_X = self.low_tape.eval_interval(V)
        low_c = self.low_tape.eval_interval(Vc)
        jac = self.jac_tape.eval_interval(V)
        rem = self.rem_tape.eval_interval(B + U)
        dV = [v - m for v, m in zip(V, mids)]
        spans = [Interval._raw(np.float64(0.0), ck.hi) for ck in c]
        end, seg = [], []
        for i in range(d):
            natural = X[i] + c[N] * rem[i]
            centred = Vc[i] + c[N] * rem[i]
            whole = X[i] + spans[N] * rem[i]
            for k in range(1, N):
                natural = natural + c[k] * low_X[(k - 1) * d + i]
                centred = centred + c[k] * low_c[(k - 1) * d + i]
                whole = whole + spans[k] * low_X[(k - 1) * d + i]
            for j in range(nv):
                diag = np.float64(1.0 if i == j else 0.0)
                Jij = Interval._raw(diag, diag)
                for k in range(1, N):
                    Jij = Jij + c[k] * jac[((k - 1) * d + i) * nv + j]
                centred = centred + Jij * dV[j]
            s = whole.intersect(B[i])
            seg.append(s)
            end.append(natural.intersect(centred).intersect(s))
        ok = _all_valid(end) & _all_valid(seg)
        return seg, end, ok

    def step(self, X, U, h: Fraction):
        B, found = self.apriori(X, U, h)
        seg, end, ok = self.taylor(X, U, B, h)
        return seg, end, ok & found


def variational_system(model: Model) -> list:
    """ODEs for the state together with its sensitivity to the start point.

    States are ``x`` then ``M`` (row-major ``d x d``), inputs are ``u`` then
    ``P = d(pi)/dx`` (row-major ``q x d``)::

        M' = f_x(x, u) M + f_u(x, u) P,   M(0) = I
    """
    d, q = model.state_dim, model.input_dim
    D = d + d * d
    mapping = list(range(d)) + [D + l for l in range(q)]
    odes = [substitute(f, mapping) for f in model.odes]
    fx = [[substitute(differentiate(f, k), mapping) for k in range(d)] for f in model.odes]
    fu = [[substitute(differentiate(f, d + l), mapping) for l in range(q)] for f in model.odes]
    for i in range(d):
        for j in range(d):
            acc = ZERO
            for k in range(d):
                acc = s_add(acc, s_mul(fx[i][k], Var(d + k * d + j)))
            for l in range(q):
                acc = s_add(acc, s_mul(fu[i][l], Var(D + q + l * d + j)))
            odes.append(acc)
    return odes


class Reach:
    """Flowpipes over one sampling period for a model.

    The state is enclosed two ways and the results intersected: a plain box
    integration, and the centred form ``x(t; c) + M(t) (X0 - c)`` where
    ``x(t; c)`` is integrated from the cell centre and ``M`` encloses the
    sensitivity of the period map to the start point (including through the
    held control ``u = pi(x0)``). The centred form keeps the correlation
    between the start point and its own control input.

    With ``coupled=False`` only the plain box integration is used, the held
    input being the interval of the control law over the whole start box.
    """

    def __init__(self, model: Model, order: int = DEFAULT_ORDER, coupled: bool = True):
        d, q = model.state_dim, model.input_dim
        self.model = model
        self.order = order
        self.coupled = coupled
        self.d, self.q = d, q
        self.base = TaylorIntegrator(model.odes, d, q, order)
        self.variational = (TaylorIntegrator(variational_system(model), d + d * d, q + q * d, order)
                            if coupled else None)
        self.control_tape = Tape(list(model.input_laws), d) if q else None
        self.control_jac_tape = Tape([differentiate(pi, j) for pi in model.input_laws
                                      for j in range(d)], d) if q else None
        self.steps = model.micro_steps()

    def control_input(self, X: list[Interval], event: int) -> list[Interval]:
        if self.q == 0:
            return []
        if event == 1:
            zero = np.zeros_like(X[0].lo)
            return [Interval._raw(zero, zero) for _ in range(self.q)]
        return _broadcast(self.control_tape.eval_interval(X), np.shape(X[0].lo))

    def control_jacobian(self, X: list[Interval], event: int) -> list[Interval]:
        if self.q == 0:
            return []
        if event == 1:
            zero = np.zeros_like(X[0].lo)
            return [Interval._raw(zero, zero) for _ in range(self.q * self.d)]
        return _broadcast(self.control_jac_tape.eval_interval(X), np.shape(X[0].lo))

    def _start(self, X0, event):
        """Initial integration state for start boxes ``X0`` (and its validity)."""
        U = self.control_input(X0, event)
        if not self.coupled:
            return (X0, U), (_all_valid(U) if U else True)
        n = np.shape(X0[0].lo)
        Xc, mids = _point(X0)
        dX = [x - c for x, c in zip(X0, mids)]
        UP = U + self.control_jacobian(X0, event)
        Uc = self.control_input(Xc, event)
        one, zero = np.ones(n), np.zeros(n)
        M0 = [Interval._raw(one if i == j else zero, one if i == j else zero)
              for i in range(self.d) for j in range(self.d)]
        good = (_all_valid(UP) & _all_valid(Uc)) if UP else True
        return (X0 + M0, UP, Xc, Uc, dX), good

    def _advance(self, state, h: Fraction):
        """One micro-step: ``(segment, end, ok, next_state)``."""
        d = self.d
        if not self.coupled:
            X, U = state
            seg, end, ok = self.base.step(X, U, h)
            return seg, end, ok, (end, U)
        XA, UP, Xc, Uc, dX = state
        segA, endA, okA = self.variational.step(XA, UP, h)
        segC, endC, okC = self.base.step(Xc, Uc, h)
        seg, end = [], []
        for i in range(d):
            s_c, e_c = segC[i], endC[i]
            for j in range(d):
                s_c = s_c + segA[d + i * d + j] * dX[j]
                e_c = e_c + endA[d + i * d + j] * dX[j]
            seg.append(segA[i].intersect(s_c))
            end.append(endA[i].intersect(e_c))
        ok = okA & okC & _all_valid(seg) & _all_valid(end)
        return seg, end, ok, (end + endA[d:], UP, endC, Uc, dX)

    def flowpipe_batch(self, lo, hi, event: int, safe: Box | None = None,
                       keep_segments: bool = True) -> FlowpipeBatch:
        """Flowpipes from the boxes ``[lo[b], hi[b]]`` (arrays of shape (n, d)).

        With ``safe`` given, entries whose pipe leaves it are dropped as soon
        as that happens (``left_safe`` set, ``ok`` cleared).
        """
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        n, d = lo.shape
        n_steps = len(self.steps)
        ok = np.ones(n, dtype=bool)
        left = np.zeros(n, dtype=bool)
        end_lo = np.full((n, d), np.nan)
        end_hi = np.full((n, d), np.nan)
        seg_lo = np.full((n_steps, n, d), np.nan) if keep_segments else None
        seg_hi = np.full((n_steps, n, d), np.nan) if keep_segments else None
        active = np.arange(n)
        with np.errstate(all="ignore"):
            X0 = [Interval._raw(lo[:, i].copy(), hi[:, i].copy()) for i in range(d)]
            state, good = self._start(X0, event)
            good = np.broadcast_to(good, (n,)).copy()
            for step, h in enumerate(self.steps):
                seg, end, fine, state = self._advance(state, h)
                good = good & fine
                if keep_segments:
                    for i in range(d):
                        seg_lo[step, active, i] = seg[i].lo
                        seg_hi[step, active, i] = seg[i].hi
                keep = good
                if safe is not None:
                    inside = np.ones(active.size, dtype=bool)
                    for i in range(d):
                        inside &= (seg[i].lo >= safe.lo[i]) & (seg[i].hi <= safe.hi[i])
                    left[active[good & ~inside]] = True
                    keep = good & inside
                ok[active[~keep]] = False
                if step == n_steps - 1:
                    for i in range(d):
                        end_lo[active, i] = end[i].lo
                        end_hi[active, i] = end[i].hi
                    break
                if not keep.all():
                    active = active[keep]
                    state = tuple(_slice(part, keep) for part in state)
                    good = good[keep]
                if active.size == 0:
                    break
        end_lo[~ok] = np.nan
        end_hi[~ok] = np.nan
        return FlowpipeBatch(ok, left, end_lo, end_hi, seg_lo, seg_hi)


@lru_cache(maxsize=16)
def integrator(model: Model, order: int = DEFAULT_ORDER, coupled: bool = True) -> Reach:
    return Reach(model, order, coupled)


def _box_batch(box: Box) -> list[Interval]:
    return [Interval._raw(np.array([a]), np.array([b])) for a, b in zip(box.lo, box.hi)]


def _unbatch(ivs) -> Box:
    return Box(tuple(float(iv.lo[0]) for iv in ivs), tuple(float(iv.hi[0]) for iv in ivs))


def _u_batch(u: Sequence[Interval]) -> list[Interval]:
    return [Interval._raw(np.atleast_1d(iv.lo).astype(float), np.atleast_1d(iv.hi).astype(float))
            for iv in u]


def control_input(model: Model, start: Box) -> list[Interval]:
    """Interval value of every control law over ``start``."""
    if model.input_dim == 0:
        return []
    out = integrator(model).control_tape.eval_interval(start.intervals())
    if not all(np.all(iv.is_valid()) for iv in out):
        raise IntervalError("control law undefined on start box")
    return [Interval._raw(np.float64(iv.lo), np.float64(iv.hi)) for iv in out]


def apriori_enclosure(model: Model, start: Box, u: Sequence[Interval], h) -> Box:
    h = Fraction(h)
    if h <= 0:
        raise ValueError("step must be positive")
    with np.errstate(all="ignore"):
        B, ok = integrator(model).base.apriori(_box_batch(start), _u_batch(u), h)
    if not ok[0]:
        raise EnclosureError("a-priori enclosure not found")
    return _unbatch(B)


def taylor_step(model: Model, start: Box, u: Sequence[Interval], h,
                order: int = DEFAULT_ORDER) -> tuple[Box, Box]:
    """``(enclosure over [0, h], enclosure at h)`` for one micro-step."""
    h = Fraction(h)
    ig = integrator(model, order).base
    X, U = _box_batch(start), _u_batch(u)
    with np.errstate(all="ignore"):
        B, ok = ig.apriori(X, U, h)
        if not ok[0]:
            raise EnclosureError("a-priori enclosure not found")
        seg, end, fine = ig.taylor(X, U, B, h)
    if not fine[0]:
        raise EnclosureError("Taylor enclosure undefined")
    return _unbatch(seg), _unbatch(end)


def flowpipe(model: Model, start: Box, event: int, order: int = DEFAULT_ORDER) -> Flowpipe:
    if event not in (0, 1):
        raise ValueError("event must be 0 (meet) or 1 (miss)")
    ig = integrator(model, order)
    res = ig.flowpipe_batch(start.lo_array[None, :], start.hi_array[None, :], event)
    if not res.ok[0]:
        raise EnclosureError("flowpipe construction failed")
    times, t = [], Fraction(0)
    for h in ig.steps:
        times.append((t, t + h))
        t += h
    segments = [Box(tuple(res.seg_lo[k, 0].tolist()), tuple(res.seg_hi[k, 0].tolist()))
                for k in range(len(ig.steps))]
    end = Box(tuple(res.end_lo[0].tolist()), tuple(res.end_hi[0].tolist()))
    return Flowpipe(times, segments, end, event)
