"""Immutable expression trees over named real coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

# name -> arity
FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "exp": 1,
    "log": 1,
    "abs": 1,
    "sqrt": 1,
    "atan": 1,
    "atan2": 2,
}


class Expr:
    """Base class of all expression nodes.

    Nodes are frozen dataclasses, so structural equality and hashing come for
    free and trees can be shared between threads.
    """

    __slots__ = ()

    def _cached_hash(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self.__dataclass_fields__))
            object.__setattr__(self, "_hash", h)
            return h

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, exponent):
        return Pow(self, exponent)

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        from .printer import to_string

        return to_string(self)


@dataclass(frozen=True)
class Const(Expr):
    __hash__ = Expr._cached_hash
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0:
            # negative constants are spelled Neg(Const(c)) so that printing
            # and parsing stay inverse to each other
            raise ValueError(f"Const must be finite and nonnegative, got {self.value!r}")
        object.__setattr__(self, "value", v + 0.0)


@dataclass(frozen=True)
class Sym(Expr):
    __hash__ = Expr._cached_hash
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    __hash__ = Expr._cached_hash
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    __hash__ = Expr._cached_hash
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    __hash__ = Expr._cached_hash
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    __hash__ = Expr._cached_hash
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    __hash__ = Expr._cached_hash
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    __hash__ = Expr._cached_hash
    base: Expr
    exponent: Fraction

    def __post_init__(self):
        exponent = self.exponent
        if isinstance(exponent, float):
            exponent = Fraction(exponent).limit_denominator(10**6)
        object.__setattr__(self, "exponent", Fraction(exponent))


@dataclass(frozen=True)
class Func(Expr):
    __hash__ = Expr._cached_hash
    name: str
    args: tuple[Expr, ...]

    def __post_init__(self):
        arity = FUNCTIONS.get(self.name)
        if arity is None:
            raise ValueError(f"unknown function {self.name!r}")
        args = tuple(self.args)
        if len(args) != arity:
            raise ValueError(f"{self.name} takes {arity} argument(s), got {len(args)}")
        object.__setattr__(self, "args", args)


ZERO = Const(0.0)
ONE = Const(1.0)


def const(value: float) -> Expr:
    """Constant node for any finite real, negative values wrapped in Neg."""
    value = float(value)
    if value < 0:
        return Neg(Const(-value))
    return Const(value)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, Real):
        return const(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def func(name: str, *args) -> Func:
    return Func(name, tuple(as_expr(a) for a in args))


def symbols_of(e: Expr) -> frozenset[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Sym):
            out.add(node.name)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Neg):
            stack.append(node.arg)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Func):
            stack.extend(node.args)
    return frozenset(out)


def constant_value(e: Expr) -> float | None:
    """Value of a bare constant (possibly negated), else None."""
    sign = 1.0
    while isinstance(e, Neg):
        sign = -sign
        e = e.arg
    if isinstance(e, Const):
        return sign * e.value
    return None


def depth(e: Expr) -> int:
    if isinstance(e, (Const, Sym)):
        return 1
    if isinstance(e, (Add, Sub, Mul, Div)):
        return 1 + max(depth(e.left), depth(e.right))
    if isinstance(e, Neg):
        return 1 + depth(e.arg)
    if isinstance(e, Pow):
        return 1 + depth(e.base)
    return 1 + max(depth(a) for a in e.args)


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace symbols by expressions (simultaneously)."""
    if isinstance(e, Sym):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, (Add, Sub, Mul, Div)):
        return type(e)(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    return Func(e.name, tuple(substitute(a, mapping) for a in e.args))
