"""Model files: the problem instance for one verification run.

Line layout (blank lines are ignored)::

    <state_dim> <input_dim> <grid_count>
    <state_var_names> <input_var_names>
    <state_ode.1> ... <state_ode.state_dim>        one per line
    <input_equa.1> ... <input_equa.input_dim>      one per line
    <period> <step_size>
    <m> <k>
    <safe_state.i lo hi>                            state_dim lines
    <initial_state.i lo hi>                         state_dim lines
"""

from __future__ import annotations

import dataclasses
import math
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .expr import Expr, ParseError, parse_expr, to_text, variables
from .interval import Box

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ModelError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


@dataclass(frozen=True)
class Model:
    state_dim: int
    input_dim: int
    grid_count: int
    state_names: tuple[str, ...]
    input_names: tuple[str, ...]
    odes: tuple[Expr, ...]
    input_laws: tuple[Expr, ...]
    period: float
    step_size: float
    m: int
    K: int
    safe: Box
    initial: Box

    def __post_init__(self):
        validate(self)

    @property
    def names(self) -> tuple[str, ...]:
        return self.state_names + self.input_names

    def replace(self, **changes) -> Model:
        return dataclasses.replace(self, **changes)

    def micro_steps(self) -> list[Fraction]:
        """Exact integrator step widths; they sum to the period exactly.

        When the period is not an integer multiple of the step size the
        last step is shortened.
        """
        period = Fraction(self.period)
        h = Fraction(self.step_size)
        ratio = period / h
        n = round(ratio)
        if n >= 1 and abs(ratio - n) <= Fraction(1, 10 ** 9) * n:
            return [period / n] * n
        n = math.ceil(ratio)
        return [h] * (n - 1) + [period - (n - 1) * h]


def validate(model: Model) -> None:
    d, q = model.state_dim, model.input_dim
    if d < 1:
        raise ModelError("state_dim must be positive")
    if q < 0:
        raise ModelError("input_dim must be nonnegative")
    if model.grid_count < 1:
        raise ModelError("grid_count must be positive")
    if len(model.state_names) != d or len(model.input_names) != q:
        raise ModelError("variable name count does not match dimensions")
    if len(set(model.names)) != d + q:
        raise ModelError("duplicate variable names")
    if len(model.odes) != d or len(model.input_laws) != q:
        raise ModelError("equation count does not match dimensions")
    for e in model.odes:
        if any(i >= d + q for i in variables(e)):
            raise ModelError("ODE references an undeclared variable")
    for e in model.input_laws:
        if any(i >= d for i in variables(e)):
            raise ModelError("control law may reference state variables only")
    if not (model.period > 0 and math.isfinite(model.period)):
        raise ModelError("period must be positive")
    if not (model.step_size > 0 and math.isfinite(model.step_size)):
        raise ModelError("step_size must be positive")
    if model.step_size > model.period:
        raise ModelError("step_size exceeds period")
    if model.m < 0:
        raise ModelError("m must be nonnegative")
    if model.K < 1:
        raise ModelError("K must be positive")
    if model.m > model.K:
        raise ModelError("m exceeds K")
    if model.safe.dim != d or model.initial.dim != d:
        raise ModelError("box dimension does not match state_dim")


def _numbers(tokens, lineno, kinds):
    out = []
    for tok, kind in zip(tokens, kinds):
        try:
            out.append(int(tok) if kind is int else float(tok))
        except ValueError:
            raise ModelError(f"expected {kind.__name__}, found {tok!r}", lineno) from None
        if kind is float and not math.isfinite(out[-1]):
            raise ModelError(f"non-finite number {tok!r}", lineno)
    return out


def parse_model(text: str) -> Model:
    lines = [(k + 1, ln.strip()) for k, ln in enumerate(text.splitlines()) if ln.strip()]
    pos = 0

    def next_line(what):
        nonlocal pos
        if pos >= len(lines):
            raise ModelError(f"unexpected end of file, expected {what}")
        pos += 1
        return lines[pos - 1]

    def fields(what, kinds):
        lineno, ln = next_line(what)
        toks = ln.split()
        if len(toks) != len(kinds):
            raise ModelError(f"{what}: expected {len(kinds)} tokens, found {len(toks)}", lineno)
        return _numbers(toks, lineno, kinds), lineno

    (d, q, p), hl = fields("header", (int, int, int))
    if d < 1 or q < 0 or p < 1:
        raise ModelError("header values out of range", hl)
    lineno, ln = next_line("variable names")
    names = ln.split()
    if len(names) != d + q:
        raise ModelError(f"variable names: expected {d + q} tokens, found {len(names)}", lineno)
    for nm in names:
        if not _IDENT.match(nm):
            raise ModelError(f"invalid variable name {nm!r}", lineno)
    if len(set(names)) != len(names):
        raise ModelError("duplicate variable names", lineno)

    def expression(what, scope):
        lineno, ln = next_line(what)
        try:
            return parse_expr(ln, scope)
        except ParseError as exc:
            raise ModelError(f"{what}: {exc}", lineno) from None

    odes = tuple(expression(f"ODE {k + 1}", names) for k in range(d))
    laws = tuple(expression(f"control law {k + 1}", names[:d]) for k in range(q))
    (period, step), tl = fields("period and step_size", (float, float))
    (m, K), ml = fields("m and K", (int, int))
    if m > K:
        raise ModelError("m exceeds K", ml)
    if K < 1 or m < 0:
        raise ModelError("m and K out of range", ml)
    if not (period > 0 and step > 0):
        raise ModelError("period and step_size must be positive", tl)
    if step > period:
        raise ModelError("step_size exceeds period", tl)

    def box(what):
        bounds = []
        for k in range(d):
            (lo, hi), bl = fields(f"{what} range {k + 1}", (float, float))
            if lo > hi:
                raise ModelError(f"{what} range {k + 1}: lower bound exceeds upper", bl)
            bounds.append((lo, hi))
        return Box.from_bounds(bounds)

    safe = box("safe")
    initial = box("initial")
    if pos != len(lines):
        raise ModelError("trailing content", lines[pos][0])
    if not initial.issubset(safe):
        warnings.warn("initial box is not contained in the safe box; the verdict will be unsafe",
                      stacklevel=2)
    return Model(d, q, p, tuple(names[:d]), tuple(names[d:]), odes, laws,
                 period, step, m, K, safe, initial)


def read_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def format_model(model: Model) -> str:
    """Canonical text form; ``parse_model(format_model(m)) == m``."""
    names = model.names
    out = [f"{model.state_dim} {model.input_dim} {model.grid_count}", " ".join(names)]
    out += [to_text(e, names) for e in model.odes]
    out += [to_text(e, names) for e in model.input_laws]
    out.append(f"{model.period!r} {model.step_size!r}")
    out.append(f"{model.m} {model.K}")
    for b in (model.safe, model.initial):
        out += [f"{lo!r} {hi!r}" for lo, hi in zip(b.lo, b.hi)]
    return "\n".join(out) + "\n"
