"""Exact symbolic partial derivatives."""

from __future__ import annotations

from fractions import Fraction

from .nodes import ONE, ZERO, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym, func
from .simplify import simplify


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_zero(a) or _is_zero(b):
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Mul(a, b)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_zero(b):
        return a
    if _is_zero(a):
        return Neg(b)
    return Sub(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_zero(a):
        return ZERO
    return Div(a, b)


def _raw_derivative(e: Expr, s: str) -> Expr:
    d = lambda node: _raw_derivative(node, s)  # noqa: E731
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == s else ZERO
    if isinstance(e, Neg):
        inner = d(e.arg)
        return ZERO if _is_zero(inner) else Neg(inner)
    if isinstance(e, Add):
        return _add(d(e.left), d(e.right))
    if isinstance(e, Sub):
        return _sub(d(e.left), d(e.right))
    if isinstance(e, Mul):
        return _add(_mul(d(e.left), e.right), _mul(e.left, d(e.right)))
    if isinstance(e, Div):
        dl, dr = d(e.left), d(e.right)
        return _sub(_div(dl, e.right), _div(_mul(e.left, dr), Pow(e.right, Fraction(2))))
    if isinstance(e, Pow):
        db = d(e.base)
        if _is_zero(db):
            return ZERO
        p = e.exponent
        return _mul(_mul(Const(float(abs(p))) if p >= 0 else Neg(Const(float(-p))), Pow(e.base, p - 1)), db)
    if isinstance(e, Func):
        if e.name == "atan2":
            y, x = e.args
            dy, dx = d(y), d(x)
            num = _sub(_mul(x, dy), _mul(y, dx))
            return _div(num, Add(Pow(x, Fraction(2)), Pow(y, Fraction(2))))
        (u,) = e.args
        du = d(u)
        if _is_zero(du):
            return ZERO
        name = e.name
        if name == "sin":
            outer = func("cos", u)
        elif name == "cos":
            outer = Neg(func("sin", u))
        elif name == "tan":
            outer = Pow(func("cos", u), Fraction(-2))
        elif name == "exp":
            outer = e
        elif name == "log":
            return _div(du, u)
        elif name == "abs":
            # sign(u) = u / |u|
            return _div(_mul(du, u), e)
        elif name == "sqrt":
            return _div(du, Mul(Const(2.0), e))
        elif name == "atan":
            return _div(du, Add(ONE, Pow(u, Fraction(2))))
        else:
            raise ValueError(f"no derivative rule for {name}")
        return _mul(outer, du)
    raise TypeError(f"not an expression node: {e!r}")


def differentiate(e: Expr, s: str) -> Expr:
    """Simplified partial derivative of ``e`` with respect to symbol ``s``."""
    return simplify(_raw_derivative(e, s))


def gradient(e: Expr, coords) -> tuple[Expr, ...]:
    return tuple(differentiate(e, c) for c in coords)
