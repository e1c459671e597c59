"""The worked example systems, ready to feed into the checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import Expr, Sym, as_expr, simplify, substitute
from .vectorfield import LieBasis, ProjectionMap, VectorField

XY = ("x", "y")


def circle() -> VectorField:
    """``x' = -y, y' = x``."""
    return VectorField.parse(XY, ["-y", "x"])


def scaling_field(coords=XY) -> VectorField:
    return VectorField(tuple(coords), tuple(Sym(c) for c in coords))


def angle_chart() -> ProjectionMap:
    return ProjectionMap.parse(XY, ["atan2(y, x)"], ["theta"], periods=[2 * math.pi])


def jordan(a: float) -> VectorField:
    """``x' = a x + y, y' = a y``: a nontrivial Jordan block."""
    return VectorField.linear([[a, 1.0], [0.0, a]], XY)


def jordan_symmetry_as_printed(a: float) -> VectorField:
    """``x * F((a y - x log|x|) / (a x)) d/dx`` with ``F`` the identity.

    Not a symmetry of :func:`jordan`: its bracket with the dynamics has
    x-component ``-(a x + y log x + y) / a``.  Kept as a counterexample next
    to :func:`jordan_symmetry`, which swaps the roles of x and y.
    """
    return VectorField.parse(XY, [f"x * (({a!r}) * y - x * log(abs(x))) / (({a!r}) * x)", "0"])


def jordan_symmetry(a: float) -> VectorField:
    """``y * F((a x - y log|y|) / (a y)) d/dx`` with ``F`` the identity.

    ``(a x - y log|y|) / (a y)`` is a first integral of :func:`jordan` and
    ``y`` solves ``v(eta) = a eta``, so the bracket with the dynamics vanishes.
    """
    return VectorField.parse(XY, [f"y * (({a!r}) * x - y * log(abs(y))) / (({a!r}) * y)", "0"])


def skew_product(f: str, g: str) -> VectorField:
    """``x' = f(x), y' = g(x, y)``."""
    return VectorField.parse(XY, [f, g])


LORENZ = ("u1", "u2", "u3")
ROSSLER = ("r1", "r2", "r3")


def lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0, coords=LORENZ) -> list[Expr]:
    x, y, z = (Sym(c) for c in coords)
    return [as_expr(sigma) * (y - x), x * (as_expr(rho) - z) - y, x * y - as_expr(beta) * z]


def rossler(a: float = 0.2, b: float = 0.2, c: float = 5.7, coords=ROSSLER) -> list[Expr]:
    x, y, z = (Sym(c_) for c_ in coords)
    return [-y - z, x + as_expr(a) * y, as_expr(b) + z * (x - as_expr(c))]


def default_mixing() -> np.ndarray:
    """Fixed, well-conditioned invertible 6x6 mixing matrix."""
    rng = np.random.default_rng(2024)
    S = np.eye(6) + np.round(rng.uniform(-0.5, 0.5, size=(6, 6)), 2)
    return S


@dataclass(frozen=True)
class MixedSystem:
    field: VectorField
    S: np.ndarray
    lorenz_subspace: np.ndarray  # S[:, :3]
    rossler_subspace: np.ndarray  # S[:, 3:]

    def embed(self, z) -> np.ndarray:
        return self.S @ np.asarray(z, dtype=float)

    def unmix(self, x) -> np.ndarray:
        return np.linalg.solve(self.S, np.asarray(x, dtype=float))


def lorenz_rossler(S: np.ndarray | None = None, coords=None) -> MixedSystem:
    """Decoupled Lorenz and Rossler systems seen through the linear change ``x = S z``."""
    S = default_mixing() if S is None else np.asarray(S, dtype=float)
    coords = tuple(coords) if coords is not None else tuple(f"x{i + 1}" for i in range(6))
    Sinv = np.linalg.inv(S)
    z_of_x = {}
    for i, name in enumerate(LORENZ + ROSSLER):
        e: Expr = as_expr(0.0)
        for j, c in enumerate(coords):
            e = e + as_expr(float(Sinv[i, j])) * Sym(c)
        z_of_x[name] = simplify(e)
    f = [substitute(e, z_of_x) for e in lorenz() + rossler()]
    comps = []
    for i in range(6):
        e = as_expr(0.0)
        for j in range(6):
            if S[i, j] != 0:
                e = e + as_expr(float(S[i, j])) * f[j]
        comps.append(simplify(e))
    return MixedSystem(VectorField(coords, tuple(comps)), S, S[:, :3].copy(), S[:, 3:].copy())


def scaling_group(coords=XY) -> LieBasis:
    return LieBasis.of(scaling_field(coords))
