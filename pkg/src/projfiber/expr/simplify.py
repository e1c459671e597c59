"""Conservative rule-based simplification.

Expressions are normalized to a sum of monomials with float coefficients.
A monomial is a product of *atoms* raised to rational powers, where an atom
is a symbol, a function call with simplified arguments, or a sum that could
not be expanded away (e.g. a denominator ``x + y``).  Like terms merge, so
``-y*2*x + x*2*y`` collapses to ``0``.  Anything beyond these rules is left
for the numeric zero test.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .evaluate import DomainError, _FUNC_IMPL
from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym, const
from .printer import to_string

# cap on the number of terms produced by distributing a product of sums
MAX_EXPANDED_TERMS = 256
MAX_EXPANDED_POWER = 8

Monomial = tuple  # tuple[tuple[Expr, Fraction], ...], sorted by atom key
Poly = dict  # dict[Monomial, float]


@lru_cache(maxsize=65536)
def _atom_key(atom: Expr) -> tuple:
    rank = 0 if isinstance(atom, Sym) else 1 if isinstance(atom, Func) else 2
    return (rank, to_string(atom))


def _mono_key(m: Monomial) -> tuple:
    return tuple((_atom_key(a), -e) for a, e in m)


def _exp(e):
    # integral exponents are kept as int; Fraction hashing dominates otherwise
    return e.numerator if e.denominator == 1 else e


def _mono_from(factors: dict) -> Monomial:
    items = [(a, _exp(e)) for a, e in factors.items() if e != 0]
    items.sort(key=lambda ae: _atom_key(ae[0]))
    return tuple(items)


def _const_poly(c: float) -> Poly:
    return {(): c} if c != 0 else {}


def _atom_poly(atom: Expr, exponent: Fraction = Fraction(1)) -> Poly:
    return {((atom, _exp(Fraction(exponent))),): 1.0}


def _add(a: Poly, b: Poly, sign: float = 1.0) -> Poly:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0.0) + sign * c
        if v == 0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _scale(a: Poly, s: float) -> Poly:
    if s == 0:
        return {}
    return {m: c * s for m, c in a.items()}


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    factors = dict(m1)
    for atom, e in m2:
        factors[atom] = factors.get(atom, 0) + e
    return _mono_from(factors)


def _fix_abs(p: Poly) -> Poly:
    """|u|^(2n) -> u^(2n)."""
    if not any(
        isinstance(a, Func) and a.name == "abs" and e.denominator == 1 and e.numerator % 2 == 0
        for m in p
        for a, e in m
    ):
        return p
    out: Poly = {}
    for m, c in p.items():
        rest = {}
        extra: list[Poly] = []
        for a, e in m:
            if isinstance(a, Func) and a.name == "abs" and e.denominator == 1 and e.numerator % 2 == 0:
                extra.append(_pow(_canon(a.args[0]), e))
            else:
                rest[a] = e
        term: Poly = {_mono_from(rest): c}
        for q in extra:
            term = _mul(term, q)
        out = _add(out, term)
    return out


def _is_monomial(p: Poly) -> bool:
    return len(p) == 1


def _atomize(p: Poly) -> Poly:
    """Wrap a multi-term sum as a single opaque atom."""
    if len(p) <= 1:
        return p
    return _atom_poly(rebuild(p))


def _mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return {}
    if len(a) * len(b) > MAX_EXPANDED_TERMS:
        if len(a) > 1:
            a = _atomize(a)
        if len(b) > 1:
            b = _atomize(b)
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0.0) + c1 * c2
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
    return _fix_abs(out)


def _pow(p: Poly, e: Fraction) -> Poly:
    e = Fraction(e)
    if e == 0:
        return _const_poly(1.0)
    if not p:
        if e > 0:
            return {}
        return _atom_poly(Pow(Const(0.0), e))
    if e == 1:
        return p
    if len(p) == 1:
        (m, c), = p.items()
        if e.denominator == 1:
            try:
                coef = c ** e.numerator
            except (OverflowError, ZeroDivisionError):
                return _atom_poly(rebuild(p), e)
            factors = {a: k * e for a, k in m}
            return _fix_abs({_mono_from(factors): coef})
        if c > 0 and len(m) == 1 and m[0][1] == 1:
            return {((m[0][0], _exp(e)),): c ** float(e)}
        if c == 1 and len(m) == 1 and m[0][1] == 1:
            return {((m[0][0], _exp(e)),): 1.0}
        return _atom_poly(rebuild(p), e)
    if e.denominator == 1 and 1 < e.numerator <= MAX_EXPANDED_POWER and len(p) ** e.numerator <= MAX_EXPANDED_TERMS:
        out = p
        for _ in range(e.numerator - 1):
            out = _mul(out, p)
        return out
    return _atom_poly(rebuild(p), e)


def _inverse(p: Poly) -> Poly:
    return _pow(p, Fraction(-1))


def _func(name: str, args: tuple[Expr, ...]) -> Poly:
    values = [_as_constant(a) for a in args]
    if all(v is not None for v in values):
        try:
            value = _FUNC_IMPL[name](*values, 0.0)
        except (DomainError, ValueError, OverflowError):
            value = None
        if value is not None and math.isfinite(value):
            return _const_poly(value)
    return _atom_poly(Func(name, args))


def _as_constant(e: Expr) -> float | None:
    p = _canon(e)
    if not p:
        return 0.0
    if len(p) == 1 and () in p:
        return p[()]
    return None


@lru_cache(maxsize=65536)
def _canon_cached(e: Expr) -> tuple:
    return tuple(_canon_uncached(e).items())


# simplify() outputs mapped to the polynomial they were rebuilt from
_REBUILT: dict = {}
_REBUILT_MAX = 65536


def _canon(e: Expr) -> Poly:
    known = _REBUILT.get(e)
    if known is not None:
        return dict(known)
    return dict(_canon_cached(e))


def _canon_uncached(e: Expr) -> Poly:
    if isinstance(e, Const):
        return _const_poly(e.value)
    if isinstance(e, Sym):
        return _atom_poly(e)
    if isinstance(e, Neg):
        return _scale(_canon(e.arg), -1.0)
    if isinstance(e, Add):
        return _add(_canon(e.left), _canon(e.right))
    if isinstance(e, Sub):
        return _add(_canon(e.left), _canon(e.right), -1.0)
    if isinstance(e, Mul):
        return _mul(_canon(e.left), _canon(e.right))
    if isinstance(e, Div):
        den = _canon(e.right)
        if not den:
            return _mul(_canon(e.left), _atom_poly(Pow(Const(0.0), Fraction(-1))))
        return _mul(_canon(e.left), _inverse(den))
    if isinstance(e, Pow):
        return _pow(_canon(e.base), e.exponent)
    if isinstance(e, Func):
        return _func(e.name, tuple(simplify(a) for a in e.args))
    raise TypeError(f"not an expression node: {e!r}")


def _factor(atom: Expr, e: Fraction) -> Expr:
    return atom if e == 1 else Pow(atom, e)


def _product(factors: list[Expr]) -> Expr | None:
    out = None
    for f in factors:
        out = f if out is None else Mul(out, f)
    return out


def _term(m: Monomial, c: float) -> Expr:
    """Expression for ``|c| * m``; the sign is handled by the caller."""
    num = [_factor(a, e) for a, e in m if e > 0]
    den = [_factor(a, -e) for a, e in m if e < 0]
    mag = abs(c)
    if mag != 1 or not num:
        num.insert(0, Const(mag))
    expr = _product(num)
    if den:
        expr = Div(expr, _product(den))
    return expr


def rebuild(p: Poly) -> Expr:
    """Deterministic expression for a normalized polynomial."""
    if not p:
        return Const(0.0)
    items = sorted(p.items(), key=lambda mc: _mono_key(mc[0]))
    out = None
    for m, c in items:
        t = _term(m, c)
        if out is None:
            out = Neg(t) if c < 0 else t
        else:
            out = Sub(out, t) if c < 0 else Add(out, t)
    return out


def simplify(e: Expr) -> Expr:
    """Normalize ``e``; the result is mathematically equal where ``e`` is defined."""
    p = _canon(e)
    out = rebuild(p)
    if len(_REBUILT) >= _REBUILT_MAX:
        _REBUILT.clear()
    _REBUILT[out] = tuple(p.items())
    return out


def is_symbolic_zero(e: Expr) -> bool:
    return not _canon(e)


def is_constant(e: Expr) -> bool:
    p = _canon(e)
    return not p or (len(p) == 1 and () in p)


def polynomial_terms(e: Expr) -> dict:
    """Normalized monomial -> coefficient map, for inspection and tests."""
    return _canon(e)


__all__ = ["simplify", "rebuild", "is_symbolic_zero", "is_constant", "const"]
