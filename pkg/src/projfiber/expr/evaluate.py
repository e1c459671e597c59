"""Numeric evaluation: a direct tree walk and a compiled (code-generated) path."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym


class DomainError(ArithmeticError):
    """Expression evaluated at an analytic singularity."""


class UnboundSymbolError(KeyError):
    pass


def _div(a: float, b: float, eps: float) -> float:
    if abs(b) <= eps:
        raise DomainError("division by zero")
    return a / b


def _pow(b: float, num: int, den: int, eps: float) -> float:
    try:
        if den == 1:
            if num < 0 and abs(b) <= eps:
                raise DomainError("zero raised to a negative power")
            return b**num
        if b < 0:
            if den % 2 == 0:
                raise DomainError("even root of a negative number")
            r = (-b) ** (num / den)
            return -r if num % 2 else r
        if b <= eps and num < 0:
            raise DomainError("zero raised to a negative power")
        return b ** (num / den)
    except (OverflowError, ZeroDivisionError) as exc:
        raise DomainError(str(exc)) from None


def _log(a: float, eps: float) -> float:
    if a <= eps:
        raise DomainError("log of a nonpositive number")
    return math.log(a)


def _sqrt(a: float, eps: float) -> float:
    if a < 0:
        raise DomainError("sqrt of a negative number")
    return math.sqrt(a)


def _tan(a: float, eps: float) -> float:
    if abs(math.cos(a)) <= eps:
        raise DomainError("tan at a pole")
    return math.tan(a)


def _exp(a: float, eps: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError("exp overflow") from None


def _atan2(y: float, x: float, eps: float) -> float:
    if abs(x) <= eps and abs(y) <= eps:
        raise DomainError("atan2 at the origin")
    return math.atan2(y, x)


def _sin(a, eps):
    return math.sin(a)


def _cos(a, eps):
    return math.cos(a)


def _abs(a, eps):
    return abs(a)


def _atan(a, eps):
    return math.atan(a)


_FUNC_IMPL = {
    "sin": _sin,
    "cos": _cos,
    "tan": _tan,
    "exp": _exp,
    "log": _log,
    "abs": _abs,
    "sqrt": _sqrt,
    "atan": _atan,
    "atan2": _atan2,
}


def _finite(value: float) -> float:
    if not math.isfinite(value):
        raise DomainError("non-finite intermediate value")
    return value


def evaluate(e: Expr, point: Mapping[str, float], *, singular_eps: float = 0.0) -> float:
    """Evaluate ``e`` with every symbol bound by ``point``.

    ``singular_eps`` widens the singular set: denominators and log arguments
    with magnitude at most ``singular_eps`` raise :class:`DomainError`.
    """

    def ev(node: Expr) -> float:
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Sym):
            try:
                return float(point[node.name])
            except KeyError:
                raise UnboundSymbolError(node.name) from None
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Add):
            return _finite(ev(node.left) + ev(node.right))
        if isinstance(node, Sub):
            return _finite(ev(node.left) - ev(node.right))
        if isinstance(node, Mul):
            return _finite(ev(node.left) * ev(node.right))
        if isinstance(node, Div):
            return _finite(_div(ev(node.left), ev(node.right), singular_eps))
        if isinstance(node, Pow):
            p = node.exponent
            return _finite(_pow(ev(node.base), p.numerator, p.denominator, singular_eps))
        if isinstance(node, Func):
            return _finite(_FUNC_IMPL[node.name](*(ev(a) for a in node.args), singular_eps))
        raise TypeError(f"not an expression node: {node!r}")

    return ev(e)


def _codegen(exprs: Sequence[Expr], coords: Sequence[str]) -> str:
    """SSA-style Python source; shared subtrees are computed once."""
    index = {name: i for i, name in enumerate(coords)}
    lines: list[str] = []
    memo: dict[Expr, str] = {}

    def emit(node: Expr) -> str:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            ref = repr(node.value)
            memo[node] = ref
            return ref
        if isinstance(node, Sym):
            if node.name not in index:
                raise UnboundSymbolError(node.name)
            ref = f"_x[{index[node.name]}]"
            memo[node] = ref
            return ref
        if isinstance(node, Neg):
            code = f"-({emit(node.arg)})"
        elif isinstance(node, Add):
            code = f"{emit(node.left)} + {emit(node.right)}"
        elif isinstance(node, Sub):
            code = f"{emit(node.left)} - ({emit(node.right)})"
        elif isinstance(node, Mul):
            code = f"({emit(node.left)}) * ({emit(node.right)})"
        elif isinstance(node, Div):
            code = f"_div({emit(node.left)}, {emit(node.right)}, _eps)"
        elif isinstance(node, Pow):
            p: Fraction = node.exponent
            code = f"_pow({emit(node.base)}, {p.numerator}, {p.denominator}, _eps)"
        elif isinstance(node, Func):
            args = ", ".join(emit(a) for a in node.args)
            code = f"_f_{node.name}({args}, _eps)"
        else:
            raise TypeError(f"not an expression node: {node!r}")
        ref = f"_t{len(lines)}"
        lines.append(f"    {ref} = {code}")
        memo[node] = ref
        return ref

    outs = [emit(e) for e in exprs]
    body = "\n".join(lines)
    return f"def _compiled(_x, _eps):\n{body}\n    return ({', '.join(outs)},)\n"


@lru_cache(maxsize=4096)
def _compile_cached(exprs: tuple[Expr, ...], coords: tuple[str, ...]):
    source = _codegen(exprs, coords)
    namespace = {"_div": _div, "_pow": _pow}
    namespace.update({f"_f_{k}": v for k, v in _FUNC_IMPL.items()})
    exec(compile(source, "<projfiber-expr>", "exec"), namespace)
    return namespace["_compiled"]


class CompiledExprs:
    """Callable evaluating several expressions at a coordinate vector.

    Returns a float array; raises :class:`DomainError` at singular points or
    when any result is non-finite.
    """

    def __init__(self, exprs: Sequence[Expr], coords: Sequence[str], singular_eps: float = 0.0):
        self.exprs = tuple(exprs)
        self.coords = tuple(coords)
        self.singular_eps = float(singular_eps)
        self._fn = _compile_cached(self.exprs, self.coords)

    def __call__(self, x) -> np.ndarray:
        try:
            values = self._fn(tuple(float(v) for v in x), self.singular_eps)
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc)) from None
        out = np.array(values, dtype=float)
        if not np.all(np.isfinite(out)):
            raise DomainError("non-finite result")
        return out


def compile_exprs(exprs: Sequence[Expr], coords: Sequence[str], singular_eps: float = 0.0) -> CompiledExprs:
    return CompiledExprs(exprs, coords, singular_eps)
