"""Non-validated reference oracles for the test suites.

Plain floating-point simulation (classical RK4) and miss-pattern helpers.
Nothing here is part of the verification argument; it only supplies ground
truth that the validated engine must enclose.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .expr import Tape
from .model import Model

RK4_SUBSTEPS = 100  # RK4 steps per micro-step


def enumerate_patterns(m: int, K: int) -> list[tuple[int, ...]]:
    """All length-``K`` 0/1 sequences with at most ``m`` ones, lexicographic."""
    if K > 20:
        raise ValueError("K > 20 would enumerate too many patterns")
    if not 0 <= m <= K:
        raise ValueError("need 0 <= m <= K")
    return [p for p in product((0, 1), repeat=K) if sum(p) <= m]


def is_admissible(sigma: Sequence[int], m: int, K: int) -> bool:
    """Every window of ``K`` consecutive entries has at most ``m`` ones."""
    s = np.asarray(sigma, dtype=np.int64)
    if s.size <= K:
        return int(s.sum()) <= m
    c = np.concatenate([[0], np.cumsum(s)])
    return bool(np.all(c[K:] - c[:-K] <= m))


def sample_admissible_pattern(m: int, K: int, length: int, seed=None) -> np.ndarray:
    """Random miss pattern; a miss is drawn with probability 1/2 when allowed."""
    rng = np.random.default_rng(seed)
    out = np.zeros(length, dtype=np.int8)
    for i in range(length):
        recent = int(out[max(0, i - K + 1):i].sum())
        if recent < m and rng.random() < 0.5:
            out[i] = 1
    return out


class Simulator:
    """Vectorised RK4 for the sampled-data loop of a model."""

    def __init__(self, model: Model, substeps: int = RK4_SUBSTEPS):
        self.model = model
        self.substeps = substeps
        d, q = model.state_dim, model.input_dim
        self.d, self.q = d, q
        self.f = Tape(list(model.odes), d + q)
        self.pi = Tape(list(model.input_laws), d) if q else None
        self.steps = [float(h) for h in model.micro_steps()]

    def control(self, x: np.ndarray, event) -> np.ndarray:
        """Held input for states ``x`` (n, d); zero where ``event`` is 1."""
        n = x.shape[0]
        if self.q == 0:
            return np.zeros((n, 0))
        u = np.stack([np.broadcast_to(np.asarray(v, dtype=float), (n,))
                      for v in self.pi.eval_real([x[:, j] for j in range(self.d)])], axis=1)
        miss = np.broadcast_to(np.asarray(event, dtype=bool), (n,))
        u[miss] = 0.0
        return u

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        args = [x[:, j] for j in range(self.d)] + [u[:, l] for l in range(self.q)]
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), (n,))
                         for v in self.f.eval_real(args)], axis=1)

    def rk4(self, x, u, dt):
        k1 = self.rhs(x, u)
        k2 = self.rhs(x + 0.5 * dt * k1, u)
        k3 = self.rhs(x + 0.5 * dt * k2, u)
        k4 = self.rhs(x + dt * k3, u)
        return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def period(self, x0, event):
        """One sampling period from states ``x0`` (n, d).

        Returns ``(end, seg_lo, seg_hi)``: end states and, for every
        micro-step, the hull of the samples taken inside it (shape
        ``(n_micro, n, d)``), endpoints included.
        """
        x = np.array(x0, dtype=float, ndmin=2)
        u = self.control(x, event)
        seg_lo = np.empty((len(self.steps),) + x.shape)
        seg_hi = np.empty_like(seg_lo)
        with np.errstate(over="ignore", invalid="ignore"):
            for k, h in enumerate(self.steps):
                lo, hi = x.copy(), x.copy()
                dt = h / self.substeps
                for _ in range(self.substeps):
                    x = self.rk4(x, u, dt)
                    np.minimum(lo, x, out=lo)
                    np.maximum(hi, x, out=hi)
                seg_lo[k], seg_hi[k] = lo, hi
        return x, seg_lo, seg_hi


@dataclass
class Trajectory:
    states: np.ndarray  # (periods + 1, n, d) sampled states, NaN after leaving
    left: np.ndarray  # (n,) True if any dense sample left the safe box
    left_at: np.ndarray  # (n,) period index where it happened, -1 if never


def simulate(model: Model, x0, sigma, periods: int, substeps: int = RK4_SUBSTEPS) -> Trajectory:
    """Simulate ``periods`` sampling periods from ``x0`` (shape (d,) or (n, d)).

    ``sigma`` is a miss pattern of length >= ``periods``, either shared
    (shape (periods,)) or per trajectory (shape (n, periods)). Trajectories
    that leave the safe box are flagged and stopped.
    """
    sim = Simulator(model, substeps)
    x = np.array(x0, dtype=float, ndmin=2)
    n, d = x.shape
    sig = np.asarray(sigma)
    if sig.ndim == 1:
        sig = np.broadcast_to(sig, (n, sig.size))
    if sig.shape[1] < periods:
        raise ValueError("pattern shorter than the number of periods")
    states = np.full((periods + 1, n, d), np.nan)
    states[0] = x
    left = np.zeros(n, dtype=bool)
    left_at = np.full(n, -1)
    lo, hi = model.safe.lo_array, model.safe.hi_array
    outside0 = np.any((x < lo) | (x > hi), axis=1)
    left[outside0], left_at[outside0] = True, 0
    for k in range(periods):
        alive = np.flatnonzero(~left)
        if alive.size == 0:
            break
        end, s_lo, s_hi = sim.period(x[alive], sig[alive, k])
        bad = (np.any(s_lo < lo, axis=(0, 2)) | np.any(s_hi > hi, axis=(0, 2))
               | ~np.all(np.isfinite(end), axis=1))
        left[alive[bad]] = True
        left_at[alive[bad]] = k
        x[alive] = end
        good = alive[~bad]
        states[k + 1, good] = x[good]
    return Trajectory(states, left, left_at)
