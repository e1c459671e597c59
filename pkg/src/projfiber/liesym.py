"""Decision procedures: symmetry, closure, invariance, fiber consistency, classification."""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from .expr import DomainError, Expr, ZeroKind, is_zero
from .expr.zerotest import DEFAULT_TOL
from .flow import IntegrationError, IntegratorConfig, group_flow
from .report import CheckReport, Method, Verdict, combine, parallel_map
from .sampling import Box, SamplingError, draw_valid
from .vectorfield import (
    ChartViolation,
    CoordinateMismatch,
    LieBasis,
    ProjectionMap,
    VectorField,
    apply,
    lie_bracket,
    pushforward,
)

DEFAULT_SAMPLES = 128
DEFAULT_FIBERS = 16
DEFAULT_EPS_RANGE = 0.5
MATES_PER_FIBER = 4


class Dynamics(enum.Enum):
    TRIVIAL = "TrivialDynamics"
    NONTRIVIAL = "NontrivialDynamics"


def _fmt(x, digits: int = 6) -> str:
    return "(" + ", ".join(f"{float(c):.{digits}g}" for c in x) + ")"


def _zero_reports(exprs: Sequence[Expr], labels: Sequence[str], domain: Box, tol: float, seed: int) -> CheckReport:
    """Pass iff every expression is zero (symbolically or numerically)."""
    method = Method.SYMBOLIC
    worst = 0.0
    for e, label in zip(exprs, labels):
        try:
            z = is_zero(e, domain, tol, seed=seed)
        except SamplingError as exc:
            return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, worst, None, f"{label}: {exc}")
        if z.kind is ZeroKind.NONZERO:
            return CheckReport(Verdict.FAIL, Method.NUMERIC, z.max_abs, z.witness, f"{label} = {e} is nonzero")
        if z.kind is ZeroKind.NUMERIC:
            method = Method.NUMERIC
            worst = max(worst, z.max_abs)
    return CheckReport(Verdict.PASS, method, worst, None, "all of " + ", ".join(labels) + " vanish")


def is_symmetry(v: VectorField, w: VectorField, domain: Box, tol: float = DEFAULT_TOL, seed: int = 0) -> CheckReport:
    """Pass iff ``[v, w] = 0`` componentwise."""
    br = lie_bracket(v, w)
    labels = [f"[v,w]^{c}" for c in br.coords]
    return _zero_reports(br.components, labels, domain, tol, seed)


def first_integral_check(F: Expr, v: VectorField, domain: Box, tol: float = DEFAULT_TOL, seed: int = 0) -> CheckReport:
    """Pass iff ``v(F) = 0``."""
    return _zero_reports([apply(v, F)], ["v(F)"], domain, tol, seed)


def invariance_check(pi: ProjectionMap, g: LieBasis, domain: Box, tol: float = DEFAULT_TOL, seed: int = 0) -> CheckReport:
    """Pass iff ``w_i(pi^a) = 0`` for every generator and component."""
    if pi.source_coords != g.coords:
        raise CoordinateMismatch(f"projection on {pi.source_coords}, generators on {g.coords}")
    exprs, labels = [], []
    for i, w in enumerate(g.fields, 1):
        for a, comp in enumerate(pi.components, 1):
            exprs.append(apply(w, comp))
            labels.append(f"w{i}(pi{a})")
    return _zero_reports(exprs, labels, domain, tol, seed)


def _valid_points(domain: Box, n: int, seed: int, accept) -> np.ndarray:
    def ok(x):
        try:
            return bool(accept(x))
        except (DomainError, ChartViolation):
            return False

    return draw_valid(domain, n, ok, seed=seed)


def closure_check(
    v: VectorField,
    g: LieBasis,
    domain: Box,
    n_samples: int = DEFAULT_SAMPLES,
    tol: float = 1e-8,
    seed: int = 0,
    *,
    rank_tol: float = 1e-8,
) -> CheckReport:
    """Pass iff ``[v, w_i]|_x`` lies in ``span{w_j|_x}`` at every sampled ``x``.

    Membership is tested by least squares with pointwise coefficients; the
    residual is measured relative to ``1 + |[v, w_i]|``.  A rank drop of the
    generators at a sample means the action is not regular there, and the
    verdict is Inconclusive.
    """
    if v.coords != g.coords:
        raise CoordinateMismatch(f"field on {v.coords}, generators on {g.coords}")
    if g.k == 0:
        return CheckReport(Verdict.PASS, Method.SYMBOLIC, 0.0, None, "empty algebra is trivially closed")
    brackets = [lie_bracket(v, w) for w in g.fields]

    def evaluable(x):
        g.matrix(x)
        for b in brackets:
            b(x)
        return True

    try:
        points = _valid_points(domain, n_samples, seed, evaluable)
    except SamplingError as exc:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, None, str(exc))
    for x in points:
        if not g.is_regular_at(x, rank_tol):
            return CheckReport(
                Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, tuple(x),
                f"generators have rank {g.rank_at(x, rank_tol)} < {g.k}: action not regular here",
            )
    if all(b.is_zero_field() for b in brackets):
        return CheckReport(Verdict.PASS, Method.SYMBOLIC, 0.0, None, "[v, w_i] = 0 for all i")
    worst = 0.0
    for x in points:
        W = g.matrix(x)
        for i, b in enumerate(brackets, 1):
            bx = b(x)
            c, *_ = np.linalg.lstsq(W.T, bx, rcond=None)
            res = float(np.linalg.norm(W.T @ c - bx)) / (1.0 + float(np.linalg.norm(bx)))
            if not res < tol:
                return CheckReport(
                    Verdict.FAIL, Method.NUMERIC, res, tuple(x),
                    f"[v, w{i}] = {_fmt(bx)} not in span of the generators",
                )
            worst = max(worst, res)
    return CheckReport(Verdict.PASS, Method.NUMERIC, worst, None, f"closure holds at {len(points)} samples")


def fiber_mates(
    g: LieBasis,
    x,
    n: int,
    rng: np.random.Generator,
    domain: Box,
    pi: ProjectionMap | None = None,
    eps_range: float = DEFAULT_EPS_RANGE,
    cfg: IntegratorConfig | None = None,
    max_tries: int = 20,
) -> list[np.ndarray]:
    """Points ``exp(eps . w)(x)`` inside ``domain`` (and ``pi``'s chart) for random ``eps``."""
    mates = []
    tries = 0
    while len(mates) < n and tries < max_tries * n:
        tries += 1
        eps = rng.uniform(-eps_range, eps_range, size=g.k)
        try:
            y = group_flow(g, eps, x, cfg)
        except IntegrationError:
            continue
        if not domain.contains(y):
            continue
        if pi is not None and not pi.is_valid_point(y):
            continue
        mates.append(y)
    return mates


def fiber_consistency_check(
    pi: ProjectionMap,
    v: VectorField,
    g: LieBasis,
    domain: Box,
    n_fibers: int = DEFAULT_FIBERS,
    tol: float = 1e-7,
    seed: int = 0,
    *,
    eps_range: float = DEFAULT_EPS_RANGE,
    cfg: IntegratorConfig | None = None,
    threads: int = 1,
) -> CheckReport:
    """Pass iff ``pi_*(v)`` agrees at ``x`` and at group-flowed mates of ``x``.

    Requires the generators to leave ``pi`` invariant (so that their orbits
    lie inside fibers); otherwise the verdict is Inconclusive.
    """
    pre = invariance_check(pi, g, domain, seed=seed)
    if pre.verdict is not Verdict.PASS:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, pre.witness,
                           f"generators do not leave the projection invariant ({pre.details})")
    try:
        bases = _valid_points(domain, n_fibers, seed, lambda x: pi.is_valid_point(x) and v(x) is not None)
    except SamplingError as exc:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, None, str(exc))
    rngs = [np.random.default_rng([seed, i]) for i in range(len(bases))]

    def one(i):
        x = bases[i]
        px = pushforward(pi, v, x)
        worst, witness = 0.0, None
        mates = fiber_mates(g, x, MATES_PER_FIBER if g.k else 1, rngs[i], domain, pi, eps_range, cfg)
        for y in mates:
            d = float(np.linalg.norm(px - pushforward(pi, v, y)))
            if d > worst:
                worst, witness = d, y
        return worst, x, witness, len(mates)

    results = parallel_map(one, range(len(bases)), threads)
    n_pairs = sum(r[3] for r in results)
    if n_pairs == 0:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, None, "no fiber mates stayed inside the domain")
    worst, x, y, _ = max(results, key=lambda r: r[0])
    details = f"{n_pairs} fiber pairs over {len(bases)} base points"
    if worst < tol:
        return CheckReport(Verdict.PASS, Method.NUMERIC, worst, None, details)
    details += f"; pushforwards differ between {_fmt(x)} and {_fmt(y)}"
    return CheckReport(Verdict.FAIL, Method.NUMERIC, worst, tuple(x), details)


def pushforward_sup(pi: ProjectionMap, v: VectorField, domain: Box, n_samples: int = DEFAULT_SAMPLES, seed: int = 0):
    """Largest ``|pi_*(v|_x)|`` over valid samples, with the maximizing point."""
    points = _valid_points(domain, n_samples, seed, lambda x: pi.is_valid_point(x) and v(x) is not None)
    worst, witness = 0.0, None
    for x in points:
        n = float(np.linalg.norm(pushforward(pi, v, x)))
        if witness is None or n > worst:
            worst, witness = n, x
    return worst, witness


def classify_projection(
    pi: ProjectionMap, v: VectorField, domain: Box, tol: float = 1e-9, n_samples: int = DEFAULT_SAMPLES, seed: int = 0
) -> Dynamics:
    """TrivialDynamics iff ``pi_*(v) = 0`` at every sample: ``pi`` consists of first integrals."""
    worst, _ = pushforward_sup(pi, v, domain, n_samples, seed)
    return Dynamics.TRIVIAL if worst < tol else Dynamics.NONTRIVIAL


__all__ = [
    "CheckReport", "Dynamics", "Method", "Verdict", "classify_projection", "closure_check", "combine",
    "fiber_consistency_check", "fiber_mates", "first_integral_check", "invariance_check", "is_symmetry",
    "pushforward_sup",
]
