"""Symbolic-then-numeric zero testing."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..sampling import Box, draw_valid
from .evaluate import DomainError, compile_exprs
from .nodes import Expr, symbols_of
from .simplify import is_symbolic_zero

DEFAULT_TOL = 1e-9
DEFAULT_SAMPLES = 64
SINGULAR_EPS = 1e-12


class ZeroKind(enum.Enum):
    SYMBOLIC = "ZeroSymbolic"
    NUMERIC = "ZeroNumeric"
    NONZERO = "NonZero"


@dataclass(frozen=True)
class ZeroVerdict:
    kind: ZeroKind
    max_abs: float = 0.0
    witness: tuple[float, ...] | None = None
    n_points: int = 0

    def __bool__(self) -> bool:
        return self.kind is not ZeroKind.NONZERO


def is_zero(
    e: Expr,
    domain: Box,
    tol: float = DEFAULT_TOL,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> ZeroVerdict:
    """Decide whether ``e`` vanishes identically on ``domain``.

    Symbolic normalization is tried first.  Otherwise ``e`` is evaluated at
    ``n_samples`` quasi-random points (points with a near-singular
    denominator are skipped) and declared numerically zero when every
    ``|e| < tol``; the first violating point is returned as a witness.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    missing = symbols_of(e) - set(domain.coords)
    if missing:
        raise ValueError(f"domain does not cover symbols {sorted(missing)}")
    if is_symbolic_zero(e):
        return ZeroVerdict(ZeroKind.SYMBOLIC)

    f = compile_exprs([e], domain.coords, singular_eps=SINGULAR_EPS)

    def accept(x) -> bool:
        try:
            f(x)
        except DomainError:
            return False
        return True

    points = draw_valid(domain, n_samples, accept, seed=seed)
    max_abs = 0.0
    for x in points:
        v = abs(float(f(x)[0]))
        if not v < tol:
            return ZeroVerdict(ZeroKind.NONZERO, v, tuple(float(c) for c in x), len(points))
        max_abs = max(max_abs, v)
    return ZeroVerdict(ZeroKind.NUMERIC, max_abs, None, len(points))


