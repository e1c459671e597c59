"""Infix printing that round-trips through :func:`parse`."""

from __future__ import annotations

from fractions import Fraction

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_ATOM = 5
_OPS = {Add: " + ", Sub: " - ", Mul: " * ", Div: " / "}


def _prec(e: Expr) -> int:
    return _PREC.get(type(e), _ATOM)


def format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def format_exponent(p: Fraction) -> str:
    if p.denominator == 1 and p >= 0:
        return str(p.numerator)
    return f"({p.numerator}/{p.denominator})" if p.denominator != 1 else f"({p.numerator})"


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        return format_number(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({', '.join(to_string(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        return "-" + (f"({inner})" if _prec(e.arg) < 3 else inner)
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) < _ATOM:
            base = f"({base})"
        return f"{base}^{format_exponent(e.exponent)}"
    # binary, left associative
    p = _PREC[type(e)]
    left = to_string(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_string(e.right)
    if _prec(e.right) <= p:
        right = f"({right})"
    return left + _OPS[type(e)] + right
