"""The linear case ``x' = A x``, ``pi(x) = P x``.

A linear projection is a fiber map exactly when ``ker P`` is A-invariant.
That is checked two independent ways: directly (``P A W = 0`` for a kernel
basis ``W``) and through structure constants (``A W = W K``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .report import CheckReport, Method, Verdict
from .vectorfield import VectorField, field_jacobian

DEFAULT_TOL = 1e-10
DEFAULT_MAX_COMBOS = 2**10


class NoReductionError(ValueError):
    """The projection has a trivial kernel, so it reduces nothing."""


class RankDeficientError(ValueError):
    pass


class ReductionError(ValueError):
    """The kernel is not invariant, so no reduced matrix exists."""


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A has non-finite entries")
        object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def field(self, coords: Sequence[str] | None = None) -> VectorField:
        coords = tuple(coords) if coords is not None else tuple(f"x{i + 1}" for i in range(self.dim))
        return VectorField.linear(self.A, coords)


@dataclass(frozen=True)
class LinearProjection:
    P: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.array(self.P, dtype=float))
        if P.shape[0] >= P.shape[1]:
            raise NoReductionError(f"projection {P.shape} does not reduce dimension")
        if _rank(P, DEFAULT_TOL) < P.shape[0]:
            raise RankDeficientError("P must have full row rank")
        object.__setattr__(self, "P", P)


@dataclass(frozen=True)
class StructureConstants:
    """``A W = W K`` for a kernel basis ``W``; ``residual`` is the relative mismatch."""

    K: np.ndarray
    W: np.ndarray
    residual: float


@dataclass(frozen=True)
class LinearReduction:
    W: np.ndarray  # kernel basis, m x k
    P: np.ndarray  # orthonormal rows spanning the complement, n x m
    B: np.ndarray  # reduced dynamics y' = B y, n x n

    def to_dict(self) -> dict:
        return {"kernel_dim": int(self.W.shape[1]), "W": self.W.tolist(), "P": self.P.tolist(), "B": self.B.tolist()}


def _rank(M: np.ndarray, tol: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(s[0], np.finfo(float).tiny)))


def _as_matrix(M) -> np.ndarray:
    if isinstance(M, LinearSystem):
        return M.A
    if isinstance(M, LinearProjection):
        return M.P
    return np.atleast_2d(np.asarray(M, dtype=float))


def kernel_basis(P, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker P``.

    Raises
    ------
    RankDeficientError
        If ``P`` does not have full row rank.
    NoReductionError
        If the kernel is trivial (e.g. square invertible ``P``).
    """
    P = _as_matrix(P)
    n, m = P.shape
    _, s, Vt = np.linalg.svd(P)
    r = int(np.sum(s > tol * max(s[0], np.finfo(float).tiny))) if s.size else 0
    if r < n:
        raise RankDeficientError(f"P has rank {r} < {n} rows")
    if r == m:
        raise NoReductionError("no reduction: P has a trivial kernel")
    return Vt[r:].T.copy()


def _opnorm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def structure_constants(A, W) -> StructureConstants:
    """Least-squares ``K = (W^T W)^-1 W^T A W`` and residual ``|AW - WK|_F / |AW|_F``."""
    A = _as_matrix(A)
    W = np.asarray(W, dtype=float)
    AW = A @ W
    K = np.linalg.solve(W.T @ W, W.T @ AW)
    denom = float(np.linalg.norm(AW))
    if denom <= 1e-14 * max(1.0, _opnorm(A)):
        residual = 0.0
    else:
        residual = float(np.linalg.norm(AW - W @ K)) / denom
    return StructureConstants(K, W, residual)


def kernel_invariance_check(A, P, tol: float = 1e-8) -> tuple[CheckReport, StructureConstants | None]:
    """Is ``ker P`` invariant under ``A``?  Pass iff ``|P A W| / (|A| |P|) < tol``.

    On Pass also returns the structure constants ``K`` with ``A W = W K``.
    """
    A, P = _as_matrix(A), _as_matrix(P)
    W = kernel_basis(P)
    scale = _opnorm(A) * _opnorm(P)
    residual = _opnorm(P @ A @ W) / scale if scale > 0 else 0.0
    if residual < tol:
        sc = structure_constants(A, W)
        return CheckReport(Verdict.PASS, Method.NUMERIC, residual, None,
                           f"ker P (dim {W.shape[1]}) is A-invariant"), sc
    # worst kernel direction leaves the kernel
    _, _, Vt = np.linalg.svd(P @ A @ W)
    witness = W @ Vt[0]
    return CheckReport(Verdict.FAIL, Method.NUMERIC, residual, tuple(witness),
                       "A maps the witness kernel vector out of ker P"), None


def structure_constant_check(A, P, tol: float = 1e-8) -> CheckReport:
    """Independent route: Pass iff ``A W = W K`` is solvable to relative residual ``< tol``."""
    W = kernel_basis(_as_matrix(P))
    sc = structure_constants(A, W)
    if sc.residual < tol:
        return CheckReport(Verdict.PASS, Method.NUMERIC, sc.residual, None, "A W = W K holds")
    return CheckReport(Verdict.FAIL, Method.NUMERIC, sc.residual, tuple(W[:, 0]), "A W has components outside span W")


def reduced_matrix(A, P, tol: float = 1e-8) -> np.ndarray:
    """``B = P A P^+`` so that ``B P = P A``; the reduced system is ``y' = B y``."""
    A, P = _as_matrix(A), _as_matrix(P)
    report, _ = kernel_invariance_check(A, P, tol)
    if not report.passed:
        raise ReductionError(f"ker P is not A-invariant (residual {report.max_residual:.3e})")
    B = P @ A @ np.linalg.pinv(P)
    mismatch = _opnorm(B @ P - P @ A)
    if mismatch > 1e-10 * max(1.0, _opnorm(A) * _opnorm(P)):
        raise ReductionError(f"B P differs from P A by {mismatch:.3e}")
    return B


def complement_rows(W: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of ``span W``."""
    return sla.null_space(W.T).T


def _schur_blocks(T: np.ndarray) -> list[tuple[int, int]]:
    """(start, size) of the 1x1 and 2x2 diagonal blocks of a real Schur form."""
    blocks = []
    i, m = 0, T.shape[0]
    while i < m:
        if i + 1 < m and T[i + 1, i] != 0.0:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def _block_eigenvalue(T: np.ndarray, start: int, size: int) -> complex:
    if size == 1:
        return complex(T[start, start])
    ev = np.linalg.eigvals(T[start : start + 2, start : start + 2])
    return complex(ev[np.argmax(ev.imag)])


def _clusters(eigs: list[complex], ctol: float) -> list[list[complex]]:
    out: list[list[complex]] = []
    for lam in eigs:
        for c in out:
            if abs(c[0] - lam) <= ctol:
                c.append(lam)
                break
        else:
            out.append([lam])
    return out


def _same_subspace(W1: np.ndarray, W2: np.ndarray, tol: float) -> bool:
    if W1.shape[1] != W2.shape[1]:
        return False
    return float(np.max(sla.subspace_angles(W1, W2))) < tol


def invariant_subspaces(A, max_dim_combos: int = DEFAULT_MAX_COMBOS, cluster_tol: float | None = None) -> list[np.ndarray]:
    """Partial list of proper nontrivial A-invariant subspaces (orthonormal bases).

    Sources: every sum of spectral subspaces over eigenvalue clusters (a real
    eigenvalue or a complex-conjugate pair, nearly repeated values merged),
    obtained by reordering the real Schur form, plus every block-boundary
    prefix of the computed Schur bases.  Subsets beyond ``max_dim_combos``
    are skipped.
    """
    A = _as_matrix(A)
    m = A.shape[0]
    if m < 2:
        return []
    normA = max(_opnorm(A), 1.0)
    ctol = cluster_tol if cluster_tol is not None else 1e-6 * normA
    T, Q = sla.schur(A, output="real")
    blocks = _schur_blocks(T)
    clusters = _clusters([_block_eigenvalue(T, s, n) for s, n in blocks], ctol)

    schur_bases = [(T, Q)]
    for count, subset in enumerate(
        itertools.chain.from_iterable(itertools.combinations(range(len(clusters)), r) for r in range(1, len(clusters)))
    ):
        if count >= max_dim_combos:
            break
        chosen = [lam for i in subset for lam in clusters[i]]

        def select(re, im, chosen=chosen):
            z = complex(re, im)
            return any(abs(z - lam) <= ctol or abs(z - lam.conjugate()) <= ctol for lam in chosen)

        Ts, Qs, sdim = sla.schur(A, output="real", sort=select)
        schur_bases.append((Ts, Qs))

    candidates: list[np.ndarray] = []
    for Ts, Qs in schur_bases:
        for start, size in _schur_blocks(Ts):
            d = start + size
            if 0 < d < m:
                candidates.append(Qs[:, :d])
    unique: list[np.ndarray] = []
    for W in candidates:
        if not any(_same_subspace(W, U, 1e-6) for U in unique):
            unique.append(W)
    return unique


def enumerate_linear_reductions(A, tol: float = 1e-8, max_dim_combos: int = DEFAULT_MAX_COMBOS) -> list[LinearReduction]:
    """Linear fiber maps of ``x' = A x``: one per A-invariant kernel found.

    Each kernel candidate is re-verified with :func:`kernel_invariance_check`;
    the list is empty when ``A`` has no proper real invariant subspace.
    """
    A = _as_matrix(A)
    out = []
    for W in invariant_subspaces(A, max_dim_combos):
        P = complement_rows(W)
        report, _ = kernel_invariance_check(A, P, tol)
        if not report.passed:
            continue
        out.append(LinearReduction(W, P, reduced_matrix(A, P, tol)))
    out.sort(key=lambda r: r.W.shape[1])
    return out


def field_linear_reductions(v: VectorField, points, tol: float = 1e-8, max_dim_combos: int = DEFAULT_MAX_COMBOS) -> list[LinearReduction]:
    """Linear projections ``P x`` that are fiber maps of a (possibly nonlinear) field.

    Candidates are the invariant kernels of the Jacobian at ``points[0]``;
    a kernel survives only if it is invariant under the Jacobian at every
    other point, i.e. ``P Dv(x) W = 0`` sample-wise.
    """
    points = [np.asarray(p, dtype=float) for p in points]
    jacobians = [field_jacobian(v, p) for p in points]
    found = enumerate_linear_reductions(jacobians[0], tol, max_dim_combos)
    return [r for r in found if all(kernel_invariance_check(J, r.P, tol)[0].passed for J in jacobians[1:])]


def trivial_symmetries(A, coords: Sequence[str] | None = None) -> tuple[VectorField, VectorField]:
    """The dynamics itself and the Euler scaling field ``sum_i x_i d/dx_i``."""
    A = _as_matrix(A)
    coords = tuple(coords) if coords is not None else tuple(f"x{i + 1}" for i in range(A.shape[0]))
    return VectorField.linear(A, coords), VectorField.linear(np.eye(A.shape[0]), coords)


def expm_scaling_squaring(A, t: float = 1.0) -> np.ndarray:
    return sla.expm(t * _as_matrix(A))
