"""Arithmetic expressions for ODE right-hand sides and control laws.

Grammar (whitespace insensitive)::

    sum     := product (('+' | '-') product)*
    product := power (('*' | '/') power)*
    power   := unary ('^' INTEGER)*
    unary   := '-' unary | atom
    atom    := NUMBER | IDENT | '(' sum ')'

Unary minus binds tighter than ``^``, so ``-x^2`` is ``(-x)^2``.
Multiplication is always explicit. Numeric literals are kept as exact
rationals; interval evaluation encloses them outwardly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .interval import Interval, IntervalError


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvaluationError(ArithmeticError):
    pass


# -- nodes -----------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Const, Var, Neg, Add, Sub, Mul, Div, Pow]

ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(value) -> Const:
    return Const(Fraction(value))


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    stripped_end = len(text.rstrip())
    while pos < stripped_end:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = {n: k for k, n in enumerate(names)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.sum()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.product()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def product(self) -> Expr:
        e = self.power()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.power()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def power(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a nonnegative integer literal", pos)
            e = Pow(e, int(val))
        return e

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "name":
            if val not in self.names:
                raise ParseError(f"unknown identifier {val!r}", pos)
            return Var(self.names[val])
        if kind == "op" and val == "(":
            e = self.sum()
            self.expect_op(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def parse_expr(text: str, names: Sequence[str]) -> Expr:
    """Parse ``text`` over the ordered variable list ``names``."""
    if not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text, names).parse()


# -- printing --------------------------------------------------------------

def _fraction_text(v: Fraction) -> str:
    den = v.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise ValueError(f"{v} has no finite decimal expansion")
    digits = max(twos, fives)
    scaled = abs(v) * 10 ** digits
    s = str(scaled.numerator).rjust(digits + 1, "0")
    text = s if digits == 0 else f"{s[:-digits]}.{s[-digits:]}"
    return text


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Pow: 3, Neg: 4}


def to_text(e: Expr, names: Sequence[str]) -> str:
    """Render ``e`` in the parser's grammar (minimal parentheses)."""

    def prec(node):
        if isinstance(node, Const):
            return 4 if node.value >= 0 else 0
        return _PREC.get(type(node), 5)

    def wrap(node, need):
        s = go(node)
        return f"({s})" if prec(node) < need else s

    def go(node) -> str:
        if isinstance(node, Const):
            if isinstance(node.value, Fraction) and node.value.denominator != 1:
                try:
                    body = _fraction_text(node.value)
                except ValueError:
                    body = f"{abs(node.value.numerator)} / {node.value.denominator}"
                    return f"-({body})" if node.value < 0 else f"({body})"
            else:
                body = str(abs(node.value))
            return f"-{body}" if node.value < 0 else body
        if isinstance(node, Var):
            return names[node.index]
        if isinstance(node, Neg):
            return "-" + wrap(node.arg, 4)
        if isinstance(node, Pow):
            return f"{wrap(node.base, 4)}^{node.exponent}"
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
        p = _PREC[type(node)]
        return f"{wrap(node.left, p)} {op} {wrap(node.right, p + 1)}"

    return go(e)


# -- simplifying constructors ---------------------------------------------

def _is(e, v) -> bool:
    return isinstance(e, Const) and e.value == v


def s_neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def s_add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(b, Neg):
        return s_sub(a, b.arg)
    return Add(a, b)


def s_sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return s_neg(b)
    return Sub(a, b)


def s_mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if _is(a, -1):
        return s_neg(b)
    if _is(b, -1):
        return s_neg(a)
    return Mul(a, b)


def s_div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0) and not _is(b, 0):
        return ZERO
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    return Div(a, b)


def s_pow(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value ** n)
    return Pow(a, n)


def simplify(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return s_neg(simplify(e.arg))
    if isinstance(e, Pow):
        return s_pow(simplify(e.base), e.exponent)
    build = {Add: s_add, Sub: s_sub, Mul: s_mul, Div: s_div}[type(e)]
    return build(simplify(e.left), simplify(e.right))


# -- differentiation -------------------------------------------------------

def differentiate(e: Expr, var: int) -> Expr:
    """Symbolic partial derivative with respect to variable ``var``."""
    memo: dict[int, Expr] = {}

    def d(node) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = ZERO
        elif isinstance(node, Var):
            out = ONE if node.index == var else ZERO
        elif isinstance(node, Neg):
            out = s_neg(d(node.arg))
        elif isinstance(node, Add):
            out = s_add(d(node.left), d(node.right))
        elif isinstance(node, Sub):
            out = s_sub(d(node.left), d(node.right))
        elif isinstance(node, Mul):
            out = s_add(s_mul(d(node.left), node.right), s_mul(node.left, d(node.right)))
        elif isinstance(node, Div):
            num = s_sub(s_mul(d(node.left), node.right), s_mul(node.left, d(node.right)))
            out = s_div(num, s_pow(node.right, 2))
        else:
            db = d(node.base)
            if _is(db, 0):
                out = ZERO
            else:
                n = node.exponent
                out = s_mul(s_mul(Const(Fraction(n)), s_pow(node.base, n - 1)), db)
        memo[key] = out
        return out

    return d(e)


def variables(e: Expr) -> set[int]:
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            seen.add(node.index)
        elif isinstance(node, Neg):
            stack.append(node.arg)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif not isinstance(node, Const):
            stack.extend((node.left, node.right))
    return seen


# -- compiled evaluation ---------------------------------------------------

class Tape:
    """A list of expressions flattened into one straight-line program.

    Structurally identical subexpressions are evaluated once, which matters
    for Lie derivatives where the same factors recur many times.
    """

    def __init__(self, exprs: Sequence[Expr], n_vars: int):
        self.n_vars = n_vars
        self.ops: list[tuple] = []
        slots: dict[tuple, int] = {}
        by_id: dict[int, int] = {}

        def emit(key) -> int:
            if key not in slots:
                slots[key] = len(self.ops)
                self.ops.append(key)
            return slots[key]

        def visit(node) -> int:
            nid = id(node)
            if nid in by_id:
                return by_id[nid]
            if isinstance(node, Const):
                slot = emit(("c", node.value))
            elif isinstance(node, Var):
                if not 0 <= node.index < n_vars:
                    raise ValueError(f"variable index {node.index} out of range")
                slot = emit(("v", node.index))
            elif isinstance(node, Neg):
                slot = emit(("neg", visit(node.arg)))
            elif isinstance(node, Pow):
                slot = emit(("pow", visit(node.base), node.exponent))
            else:
                tag = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
                slot = emit((tag, visit(node.left), visit(node.right)))
            by_id[nid] = slot
            return slot

        self.outputs = [visit(e) for e in exprs]
        self._const_iv = {k[1]: Interval.from_fraction(k[1]) for k in self.ops if k[0] == "c"}

    def eval_interval(self, box: Sequence[Interval]) -> list[Interval]:
        """Evaluate all outputs; undefined elements come back as NaN bounds."""
        vals: list = []
        for op in self.ops:
            tag = op[0]
            if tag == "c":
                vals.append(self._const_iv[op[1]])
            elif tag == "v":
                vals.append(box[op[1]])
            elif tag == "neg":
                vals.append(-vals[op[1]])
            elif tag == "pow":
                vals.append(vals[op[1]] ** op[2])
            elif tag == "+":
                vals.append(vals[op[1]] + vals[op[2]])
            elif tag == "-":
                vals.append(vals[op[1]] - vals[op[2]])
            elif tag == "*":
                vals.append(vals[op[1]] * vals[op[2]])
            else:
                vals.append(vals[op[1]] / vals[op[2]])
        return [vals[k] for k in self.outputs]

    def eval_real(self, point: Sequence) -> list:
        vals: list = []
        for op in self.ops:
            tag = op[0]
            if tag == "c":
                vals.append(float(op[1]))
            elif tag == "v":
                vals.append(point[op[1]])
            elif tag == "neg":
                vals.append(-vals[op[1]])
            elif tag == "pow":
                vals.append(vals[op[1]] ** op[2])
            elif tag == "+":
                vals.append(vals[op[1]] + vals[op[2]])
            elif tag == "-":
                vals.append(vals[op[1]] - vals[op[2]])
            elif tag == "*":
                vals.append(vals[op[1]] * vals[op[2]])
            else:
                den = vals[op[2]]
                if np.any(np.asarray(den) == 0):
                    raise EvaluationError("division by zero")
                vals.append(vals[op[1]] / den)
        return [vals[k] for k in self.outputs]


def eval_real(e: Expr, point: Sequence[float]):
    """Floating-point evaluation; ``point`` entries may be numpy arrays."""
    return Tape([e], len(point)).eval_real(point)[0]


def eval_interval(e: Expr, box: Sequence[Interval]) -> Interval:
    """Guaranteed enclosure of the range of ``e`` over ``box``."""
    out = Tape([e], len(box)).eval_interval(box)[0]
    if not np.all(out.is_valid()):
        raise IntervalError("interval evaluation undefined (division by an interval containing 0 or overflow)")
    return out


def substitute(e: Expr, mapping) -> Expr:
    """Rename variables: ``Var(k)`` becomes ``mapping[k]`` (an index or Expr)."""
    memo: dict[int, Expr] = {}

    def go(node) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = node
        elif isinstance(node, Var):
            target = mapping[node.index]
            out = Var(target) if isinstance(target, int) else target
        elif isinstance(node, Neg):
            out = Neg(go(node.arg))
        elif isinstance(node, Pow):
            out = Pow(go(node.base), node.exponent)
        else:
            out = type(node)(go(node.left), go(node.right))
        memo[key] = out
        return out

    return go(e)
