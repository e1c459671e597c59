import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import subspace_angles

from projfiber.flow import IntegratorConfig, flow_map
from projfiber.liesym import is_symmetry
from projfiber.linear import (
    LinearProjection,
    LinearSystem,
    NoReductionError,
    RankDeficientError,
    ReductionError,
    enumerate_linear_reductions,
    expm_scaling_squaring,
    kernel_basis,
    kernel_invariance_check,
    reduced_matrix,
    structure_constant_check,
    trivial_symmetries,
)
from projfiber.sampling import Box
from projfiber.vectorfield import VectorField

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def jordan_matrix(a):
    return np.array([[a, 1.0], [0.0, a]])


def random_pair(rng, invariant: bool):
    """Random (A, P) with m <= 6; ``invariant`` builds ker P as an A-invariant subspace."""
    m = int(rng.integers(2, 7))
    k = int(rng.integers(1, m))
    if not invariant:
        return rng.standard_normal((m, m)), rng.standard_normal((m - k, m))
    S = rng.standard_normal((m, m)) + 2 * np.eye(m)
    T = rng.standard_normal((m, m))
    T[k:, :k] = 0.0  # first k coordinates span an invariant subspace of T
    A = S @ T @ np.linalg.inv(S)
    P = rng.standard_normal((m - k, m - k)) @ np.linalg.inv(S)[k:, :]
    return A, P


# types


def test_type_invariants():
    with pytest.raises(ValueError):
        LinearSystem(np.ones((2, 3)))
    with pytest.raises(ValueError):
        LinearSystem([[np.nan, 0], [0, 1]])
    with pytest.raises(NoReductionError):
        LinearProjection(np.eye(2))
    with pytest.raises(RankDeficientError):
        LinearProjection([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]])


# kernel_basis


@pytest.mark.parametrize("P, expected", [([[1.0, 0.0]], [0.0, 1.0]), ([[0.0, 1.0]], [1.0, 0.0])])
def test_kernel_basis_examples(P, expected):
    W = kernel_basis(P)
    assert W.shape == (2, 1)
    assert abs(abs(W[:, 0] @ np.array(expected)) - 1.0) < 1e-12


def test_kernel_basis_square_has_no_reduction():
    with pytest.raises(NoReductionError, match="no reduction"):
        kernel_basis(np.eye(3))


def test_kernel_basis_orthonormal():
    rng = np.random.default_rng(3)
    P = rng.standard_normal((2, 5))
    W = kernel_basis(P)
    assert W.shape == (5, 3)
    assert np.allclose(W.T @ W, np.eye(3))
    assert np.linalg.norm(P @ W) < 1e-12


# kernel invariance


def test_diag_eigen_axis():
    report, sc = kernel_invariance_check(np.diag([2.0, 3.0]), [[1.0, 0.0]])
    assert report.passed
    assert sc.K == pytest.approx(np.array([[3.0]]))


@pytest.mark.parametrize("angle", np.linspace(0.0, np.pi, 13))
def test_rotation_has_no_invariant_line(angle):
    P = [[np.cos(angle), np.sin(angle)]]
    report, sc = kernel_invariance_check(ROT, P)
    assert not report.passed and sc is None
    assert report.witness is not None


def test_jordan_block():
    assert kernel_invariance_check(jordan_matrix(1.0), [[0.0, 1.0]])[0].passed
    assert not kernel_invariance_check(jordan_matrix(1.0), [[1.0, 0.0]])[0].passed


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_route_equivalence(seed, invariant):
    A, P = random_pair(np.random.default_rng(seed), invariant)
    route_a, _ = kernel_invariance_check(A, P)
    route_b = structure_constant_check(A, P)
    assert route_a.passed == route_b.passed == invariant


# reduced matrix


def test_reduced_matrix_examples():
    assert reduced_matrix(np.diag([2.0, 3.0]), [[1.0, 0.0]]) == pytest.approx(np.array([[2.0]]))
    assert reduced_matrix(jordan_matrix(1.0), [[0.0, 1.0]]) == pytest.approx(np.array([[1.0]]))
    A1 = np.array([[1.0, 2.0], [0.5, -1.0]])
    A = np.block([[A1, np.zeros((2, 2))], [np.zeros((2, 2)), np.array([[3.0, 0.0], [1.0, 4.0]])]])
    P = np.hstack([np.eye(2), np.zeros((2, 2))])
    assert reduced_matrix(A, P) == pytest.approx(A1)


def test_reduced_matrix_refuses_non_invariant():
    with pytest.raises(ReductionError):
        reduced_matrix(jordan_matrix(1.0), [[1.0, 0.0]])


# enumeration


def test_enumerate_rotation_empty():
    assert enumerate_linear_reductions(ROT) == []


def test_enumerate_diag():
    found = enumerate_linear_reductions(np.diag([1.0, 2.0]))
    assert len(found) == 2
    assert all(r.W.shape == (2, 1) for r in found)


def test_enumerate_recovers_conjugated_blocks():
    rng = np.random.default_rng(11)
    AL = rng.standard_normal((3, 3))
    AR = rng.standard_normal((3, 3))
    S = rng.standard_normal((6, 6)) + 3 * np.eye(6)
    A = S @ np.block([[AL, np.zeros((3, 3))], [np.zeros((3, 3)), AR]]) @ np.linalg.inv(S)
    subspaces = [r.W for r in enumerate_linear_reductions(A) if r.W.shape[1] == 3]
    for target in (S[:, :3], S[:, 3:]):
        best = min(np.max(subspace_angles(W, target)) for W in subspaces)
        assert best < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_enumeration_closed_under_check(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    A = rng.standard_normal((m, m))
    for r in enumerate_linear_reductions(A):
        assert kernel_invariance_check(A, r.P)[0].passed
        assert np.linalg.norm(r.B @ r.P - r.P @ A) < 1e-9 * max(1.0, np.linalg.norm(A))


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_commuting_diagram(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    A = 0.5 * rng.standard_normal((m, m))
    coords = tuple(f"x{i}" for i in range(m))
    v = VectorField.linear(A, coords)
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    for r in enumerate_linear_reductions(A):
        for _ in range(10):
            x0 = rng.standard_normal(m)
            x0 /= np.linalg.norm(x0)
            for t in np.linspace(0.0, 5.0, 6):
                E = expm_scaling_squaring(A, t)
                lhs = r.P @ E @ x0
                rhs = expm_scaling_squaring(r.B, t) @ (r.P @ x0)
                assert np.linalg.norm(lhs - rhs) < 1e-8
                if t > 0:
                    scale = max(1.0, np.linalg.norm(E @ x0))
                    assert np.linalg.norm(flow_map(v, x0, t, cfg) - E @ x0) < 1e-9 * scale


# trivial symmetries


@pytest.mark.parametrize("A", [ROT, np.diag([1.0, 2.0]), jordan_matrix(-0.5)])
def test_trivial_symmetries(A):
    w1, w2 = trivial_symmetries(A, ("x", "y"))
    v = VectorField.linear(A, ("x", "y"))
    box = Box.cube(("x", "y"))
    assert is_symmetry(v, w1, box).passed
    assert is_symmetry(v, w2, box).passed
    assert w2 == VectorField.parse(("x", "y"), ["x", "y"])
