"""Outward-rounded interval arithmetic over numpy arrays.

Bounds are float64 scalars or arrays, so a single ``Interval`` can carry a
whole batch of independent intervals (one per grid cell, say) and every
operation is applied element-wise.

Directed rounding is emulated with error-free transformations: after each
round-to-nearest operation the exact rounding error is recovered (TwoSum,
Dekker's TwoProduct, exact division remainder) and the bound is moved one ulp
outward only when the rounded result lies on the wrong side of the true
value. Exact results are therefore never widened.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

_INF = np.inf
_SPLITTER = 134217729.0  # 2**27 + 1
# Dekker splitting is unreliable outside this magnitude band.
_TINY = 2.0 ** -960
_HUGE = 2.0 ** 995


class IntervalError(ArithmeticError):
    """Raised when an interval result is undefined (division through zero,
    overflow) and the caller asked for strict evaluation."""


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = al * bl - (((p - ah * bh) - al * bh) - ah * bl)
    return p, err


def _unreliable(a, b, p):
    nz = (a != 0) & (b != 0)
    big = (np.abs(a) > _HUGE) | (np.abs(b) > _HUGE)
    return nz & ((np.abs(p) < _TINY) | big)


def add_down(a, b):
    s, err = _two_sum(a, b)
    return np.where(err < 0, np.nextafter(s, -_INF), s)


def add_up(a, b):
    s, err = _two_sum(a, b)
    return np.where(err > 0, np.nextafter(s, _INF), s)


def mul_down(a, b):
    with np.errstate(invalid="ignore", over="ignore"):
        p, err = _two_prod(a, b)
        bad = _unreliable(a, b, p)
    return np.where((err < 0) | bad, np.nextafter(p, -_INF), p)


def mul_up(a, b):
    with np.errstate(invalid="ignore", over="ignore"):
        p, err = _two_prod(a, b)
        bad = _unreliable(a, b, p)
    return np.where((err > 0) | bad, np.nextafter(p, _INF), p)


def _div_dir(a, b):
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        q = a / b
        p, perr = _two_prod(q, b)
        r = (a - p) - perr
        bad = _unreliable(q, b, p) | ((a != 0) & (np.abs(a) < _TINY))
    return q, np.sign(r) * np.sign(b), bad


def div_down(a, b):
    q, direction, bad = _div_dir(a, b)
    return np.where((direction < 0) | bad, np.nextafter(q, -_INF), q)


def div_up(a, b):
    q, direction, bad = _div_dir(a, b)
    return np.where((direction > 0) | bad, np.nextafter(q, _INF), q)


def _pow_nonneg(x, n: int, mul):
    # x >= 0 so the chain of one-sided products stays one-sided.
    out = np.ones_like(x)
    for _ in range(n):
        out = mul(out, x)
    return out


def fraction_bounds(value: Fraction) -> tuple[float, float]:
    """Tightest pair of doubles enclosing an exact rational."""
    f = float(value)
    exact = Fraction(f)
    if exact == value:
        return f, f
    if exact < value:
        return f, float(np.nextafter(f, _INF))
    return float(np.nextafter(f, -_INF)), f


def _as_float(x):
    if isinstance(x, np.ndarray):
        return x.astype(np.float64, copy=False)
    return np.float64(x)


class Interval:
    """Closed interval ``[lo, hi]``; bounds may be numpy arrays."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = _as_float(lo)
        hi = lo if hi is None else _as_float(hi)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise IntervalError("interval bounds must be finite")
        if np.any(lo > hi):
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo, hi) -> Interval:
        iv = object.__new__(cls)
        iv.lo = lo
        iv.hi = hi
        return iv

    @classmethod
    def from_fraction(cls, value: Fraction) -> Interval:
        lo, hi = fraction_bounds(value)
        return cls._raw(np.float64(lo), np.float64(hi))

    def __repr__(self) -> str:
        if np.ndim(self.lo) == 0:
            return f"Interval({float(self.lo)!r}, {float(self.hi)!r})"
        return f"Interval(lo={self.lo!r}, hi={self.hi!r})"

    # -- queries ---------------------------------------------------------
    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return self.lo + 0.5 * (self.hi - self.lo)

    def is_valid(self):
        """Element-wise: bounds finite and ordered."""
        with np.errstate(invalid="ignore"):
            return np.isfinite(self.lo) & np.isfinite(self.hi) & (self.lo <= self.hi)

    def contains(self, x):
        return (self.lo <= x) & (x <= self.hi)

    def subset_of(self, other: Interval):
        return (other.lo <= self.lo) & (self.hi <= other.hi)

    def intersect(self, other: Interval) -> Interval:
        return Interval._raw(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))

    def hull(self, other: Interval) -> Interval:
        return Interval._raw(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def inflate(self, eps) -> Interval:
        return Interval._raw(add_down(self.lo, -eps), add_up(self.hi, eps))

    # -- arithmetic ------------------------------------------------------
    @staticmethod
    def _coerce(x) -> Interval:
        if isinstance(x, Interval):
            return x
        if isinstance(x, Fraction):
            return Interval.from_fraction(x)
        v = _as_float(x)
        return Interval._raw(v, v)

    def __neg__(self) -> Interval:
        return Interval._raw(-self.hi, -self.lo)

    def __add__(self, other) -> Interval:
        o = Interval._coerce(other)
        return Interval._raw(add_down(self.lo, o.lo), add_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> Interval:
        o = Interval._coerce(other)
        return Interval._raw(add_down(self.lo, -o.hi), add_up(self.hi, -o.lo))

    def __rsub__(self, other) -> Interval:
        return Interval._coerce(other) - self

    def __mul__(self, other) -> Interval:
        o = Interval._coerce(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        lo = np.minimum(np.minimum(mul_down(a, c), mul_down(a, d)),
                        np.minimum(mul_down(b, c), mul_down(b, d)))
        hi = np.maximum(np.maximum(mul_up(a, c), mul_up(a, d)),
                        np.maximum(mul_up(b, c), mul_up(b, d)))
        return Interval._raw(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Interval:
        o = Interval._coerce(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        with np.errstate(invalid="ignore"):
            through_zero = (c <= 0) & (d >= 0)
        lo = np.minimum(np.minimum(div_down(a, c), div_down(a, d)),
                        np.minimum(div_down(b, c), div_down(b, d)))
        hi = np.maximum(np.maximum(div_up(a, c), div_up(a, d)),
                        np.maximum(div_up(b, c), div_up(b, d)))
        lo = np.where(through_zero, np.nan, lo)
        hi = np.where(through_zero, np.nan, hi)
        return Interval._raw(lo, hi)

    def __rtruediv__(self, other) -> Interval:
        return Interval._coerce(other) / self

    def __pow__(self, n: int) -> Interval:
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        n = int(n)
        if n == 0:
            one = np.ones_like(self.lo)
            return Interval._raw(one, one.copy())
        if n == 1:
            return self
        lo, hi = self.lo, self.hi
        if n % 2 == 1:
            # odd powers are monotone
            new_lo = np.where(lo >= 0, _pow_nonneg(np.abs(lo), n, mul_down),
                              -_pow_nonneg(np.abs(lo), n, mul_up))
            new_hi = np.where(hi >= 0, _pow_nonneg(np.abs(hi), n, mul_up),
                              -_pow_nonneg(np.abs(hi), n, mul_down))
            return Interval._raw(new_lo, new_hi)
        alo, ahi = np.abs(lo), np.abs(hi)
        small = np.minimum(alo, ahi)
        large = np.maximum(alo, ahi)
        straddles = (lo < 0) & (hi > 0)
        new_lo = np.where(straddles, 0.0, _pow_nonneg(small, n, mul_down))
        new_hi = _pow_nonneg(large, n, mul_up)
        return Interval._raw(new_lo, new_hi)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, one closed interval per dimension."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box bound lengths differ")
        for a, b in zip(self.lo, self.hi):
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ValueError("box bounds must be finite")
            if a > b:
                raise ValueError(f"empty box side [{a}, {b}]")

    @classmethod
    def from_bounds(cls, bounds: Iterable[Sequence[float]]) -> Box:
        pairs = [(float(a), float(b)) for a, b in bounds]
        return cls(tuple(a for a, _ in pairs), tuple(b for _, b in pairs))

    @classmethod
    def from_intervals(cls, ivs: Iterable[Interval]) -> Box:
        return cls.from_bounds((float(iv.lo), float(iv.hi)) for iv in ivs)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_array(self) -> np.ndarray:
        return np.array(self.lo, dtype=np.float64)

    @property
    def hi_array(self) -> np.ndarray:
        return np.array(self.hi, dtype=np.float64)

    def intervals(self) -> list[Interval]:
        return [Interval(a, b) for a, b in zip(self.lo, self.hi)]

    @property
    def widths(self) -> np.ndarray:
        return self.hi_array - self.lo_array

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains_point(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(self.lo_array <= x) and np.all(x <= self.hi_array))

    def issubset(self, other: Box) -> bool:
        return all(o_lo <= a and b <= o_hi
                   for a, b, o_lo, o_hi in zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: Box) -> bool:
        return all(a <= o_hi and o_lo <= b
                   for a, b, o_lo, o_hi in zip(self.lo, self.hi, other.lo, other.hi))

    def hull(self, other: Box) -> Box:
        return Box(tuple(map(min, self.lo, other.lo)), tuple(map(max, self.hi, other.hi)))
