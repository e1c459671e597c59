"""Numerical quotient maps ``M -> M/G`` by canonicalizing onto a cross-section.

A point is flowed along the group until it meets the section ``s(x) = 0``;
chart coordinates read off there label its orbit.  This stands in for
solving ``w_i(pi) = 0`` by characteristics when no closed form exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .expr import DomainError, Expr, compile_exprs, symbols_of
from .flow import IntegrationError, IntegratorConfig, group_flow
from .report import CheckReport, Method, Verdict
from .sampling import Box, SamplingError, draw_valid
from .vectorfield import CoordinateMismatch, Guard, LieBasis, _parse_components, apply

FD_STEP = 1e-6
MAX_NEWTON_STEP = 1.0


class CanonicalizationError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (last residual {residual:.3e})")


class TrivialQuotientError(ValueError):
    pass


@dataclass(frozen=True)
class CrossSection:
    """Zero set of ``constraints`` (k of them) with ``chart`` coordinates (m - k of them)."""

    coords: tuple[str, ...]
    constraints: tuple[Expr, ...]
    chart: tuple[Expr, ...]
    box: Box | None = None
    guards: tuple[Guard, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "chart", tuple(self.chart))
        object.__setattr__(self, "guards", tuple(self.guards))
        m = len(self.coords)
        if len(self.constraints) + len(self.chart) != m:
            raise CoordinateMismatch(
                f"{len(self.constraints)} constraints + {len(self.chart)} chart coordinates != dimension {m}"
            )
        used = set().union(set(), *(symbols_of(e) for e in self.constraints + self.chart))
        if used - set(self.coords):
            raise CoordinateMismatch(f"section uses undeclared symbols {sorted(used - set(self.coords))}")

    @classmethod
    def parse(
        cls,
        coords: Sequence[str],
        constraints: Sequence[str],
        chart: Sequence[str],
        box: Box | None = None,
        guards: Sequence[str] = (),
    ) -> "CrossSection":
        coords = tuple(coords)
        return cls(
            coords,
            _parse_components(constraints, coords),
            _parse_components(chart, coords),
            box,
            tuple(Guard.parse(g, coords) for g in guards),
        )

    @property
    def k(self) -> int:
        return len(self.constraints)

    @cached_property
    def _s(self):
        return compile_exprs(self.constraints, self.coords)

    @cached_property
    def _chart(self):
        return compile_exprs(self.chart, self.coords)

    @cached_property
    def _guards(self):
        return compile_exprs([g.expr for g in self.guards], self.coords)

    def residual(self, x) -> np.ndarray:
        if self.k == 0:
            return np.zeros(0)
        return self._s(x)

    def chart_values(self, x) -> np.ndarray:
        if not self.chart:
            raise TrivialQuotientError("trivial quotient: the group acts with full-dimensional orbits")
        return self._chart(x)

    def guards_hold(self, x) -> bool:
        if not self.guards:
            return True
        try:
            values = self._guards(x)
        except DomainError:
            return False
        return all(g.holds(float(v)) for g, v in zip(self.guards, values))

    def transversality(self, g: LieBasis, x) -> float:
        """Smallest singular value of ``[w_i(s_j)](x)``; zero means orbits are tangent to the section."""
        M = np.array([[float(compile_exprs([apply(w, s)], self.coords)(x)[0]) for s in self.constraints] for w in g.fields])
        if M.size == 0:
            return np.inf
        return float(np.linalg.svd(M, compute_uv=False)[-1])


def _start_points(k: int) -> list[np.ndarray]:
    starts = [np.zeros(k)]
    for mag in (0.5, 1.0, 2.0, 3.0):
        for i in range(k):
            for sign in (1.0, -1.0):
                e = np.zeros(k)
                e[i] = sign * mag
                starts.append(e)
    rng = np.random.default_rng(0)
    starts.extend(rng.uniform(-3.0, 3.0, size=(8, k)))
    return starts


def _newton(
    phi: Callable[[np.ndarray], np.ndarray],
    sec: CrossSection,
    eps0: np.ndarray,
    tol: float,
    max_iter: int,
    damped: bool,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Newton on ``eps -> s(phi(eps))``; returns (point, eps, residual norm)."""
    eps = eps0.copy()
    y = phi(eps)
    r = sec.residual(y)
    rn = float(np.linalg.norm(r))
    k = eps.size
    for _ in range(max_iter):
        if rn < tol:
            break
        J = np.empty((k, k))
        for j in range(k):
            e = np.zeros(k)
            e[j] = FD_STEP
            J[:, j] = (sec.residual(phi(eps + e)) - sec.residual(phi(eps - e))) / (2 * FD_STEP)
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        norm = float(np.linalg.norm(step))
        if not np.isfinite(norm) or norm == 0:
            break
        if norm > MAX_NEWTON_STEP:
            # far from the section the linearization overshoots into huge flow times
            step *= MAX_NEWTON_STEP / norm
        lam = 1.0
        while True:
            cand = eps + lam * step
            try:
                y_new = phi(cand)
                r_new = sec.residual(y_new)
                rn_new = float(np.linalg.norm(r_new))
            except (IntegrationError, DomainError):
                rn_new = np.inf
            if not damped or rn_new < rn or lam < 1e-6:
                break
            lam *= 0.5
        if not np.isfinite(rn_new):
            break
        eps, y, r, rn = cand, y_new, r_new, rn_new
    return y, eps, rn


def canonicalize(
    g: LieBasis,
    sec: CrossSection,
    x,
    tol: float = 1e-10,
    max_iter: int = 50,
    cfg: IntegratorConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Orbit representative of ``x`` on the section, and the flow parameters used.

    Plain Newton from ``eps = 0`` first; if that does not converge to a point
    satisfying the section guards, damped Newton, then damped Newton from a
    fixed list of restart values.
    """
    if g.coords != sec.coords:
        raise CoordinateMismatch(f"generators on {g.coords}, section on {sec.coords}")
    if g.k != sec.k:
        raise CoordinateMismatch(f"{g.k} generators but {sec.k} section constraints")
    x = np.asarray(x, dtype=float)
    if sec.box is not None and not sec.box.contains(x):
        raise ValueError(f"point {tuple(x)} outside the section's validity box")
    if g.k == 0:
        return x.copy(), np.zeros(0)

    cache: dict[tuple, np.ndarray] = {}

    def phi(eps: np.ndarray) -> np.ndarray:
        key = tuple(eps)
        if key not in cache:
            cache[key] = group_flow(g, eps, x, cfg)
        return cache[key]

    best = np.inf
    attempts = [(np.zeros(g.k), False), (np.zeros(g.k), True)] + [(s, True) for s in _start_points(g.k)[1:]]
    for eps0, damped in attempts:
        try:
            y, eps, rn = _newton(phi, sec, eps0, tol, max_iter, damped)
        except (IntegrationError, DomainError):
            continue
        best = min(best, rn)
        if rn < tol and sec.guards_hold(y) and (sec.box is None or sec.box.contains(y)):
            return y, eps
    raise CanonicalizationError(f"no orbit representative found for {tuple(x)}", best)


def quotient_map(g: LieBasis, sec: CrossSection, x, cfg: IntegratorConfig | None = None, tol: float = 1e-10) -> np.ndarray:
    """Chart coordinates of the orbit through ``x``."""
    if not sec.chart:
        raise TrivialQuotientError("trivial quotient: the group acts with full-dimensional orbits")
    y, _ = canonicalize(g, sec, x, tol=tol, cfg=cfg)
    return sec.chart_values(y)


@dataclass(frozen=True)
class QuotientMap:
    """``x -> quotient_map(g, sec, x)`` packaged as a callable."""

    g: LieBasis
    sec: CrossSection
    cfg: IntegratorConfig | None = None
    tol: float = 1e-10

    def __call__(self, x) -> np.ndarray:
        return quotient_map(self.g, self.sec, x, self.cfg, self.tol)


def _excluded(x, singular_points, radius: float) -> bool:
    return any(np.linalg.norm(np.asarray(x) - np.asarray(p)) < radius for p in singular_points)


def verify_quotient_invariance(
    g: LieBasis,
    sec: CrossSection,
    domain: Box,
    n_samples: int = 32,
    tol: float = 1e-5,
    seed: int = 0,
    *,
    delta: float = 1e-4,
    cfg: IntegratorConfig | None = None,
    singular_points: Sequence = (),
    exclusion_radius: float = 1e-3,
) -> CheckReport:
    """Pass iff ``|q(exp(delta w_i) x) - q(x)| / delta < tol`` for all generators and samples.

    Points within ``exclusion_radius`` of a declared singular point (where the
    action stops being regular) are not sampled.
    """
    values: dict[tuple, np.ndarray] = {}

    def accept(x) -> bool:
        if _excluded(x, singular_points, exclusion_radius):
            return False
        try:
            values[tuple(x)] = quotient_map(g, sec, x, cfg)
        except (CanonicalizationError, IntegrationError, DomainError, ValueError):
            return False
        return True

    try:
        points = draw_valid(domain, n_samples, accept, seed=seed)
    except SamplingError as exc:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, None, str(exc))
    worst, witness = 0.0, None
    skipped = 0
    for x in points:
        qx = values[tuple(x)]
        for i in range(g.k):
            e = np.zeros(g.k)
            e[i] = delta
            try:
                qy = quotient_map(g, sec, group_flow(g, e, x, cfg), cfg)
            except (CanonicalizationError, IntegrationError, DomainError):
                skipped += 1
                continue
            rate = float(np.linalg.norm(qy - qx)) / delta
            if witness is None or rate > worst:
                worst, witness = rate, x
    details = f"max orbit derivative of the quotient map {worst:.3e} over {len(points)} samples"
    if skipped:
        details += f" ({skipped} displaced points could not be canonicalized)"
    if worst < tol:
        return CheckReport(Verdict.PASS, Method.NUMERIC, worst, None, details)
    return CheckReport(Verdict.FAIL, Method.NUMERIC, worst, tuple(witness), details)


def chart_overlap_check(
    g: LieBasis,
    sec_a: CrossSection,
    sec_b: CrossSection,
    domain: Box,
    transition: Callable[[np.ndarray], np.ndarray] | None = None,
    n_samples: int = 32,
    tol: float = 1e-7,
    seed: int = 0,
    cfg: IntegratorConfig | None = None,
) -> CheckReport:
    """Pairwise consistency of two section charts on sampled overlap points.

    ``transition`` maps chart-a coordinates to chart-b coordinates (identity
    by default).
    """
    transition = transition or (lambda q: q)
    pairs: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}

    def accept(x) -> bool:
        try:
            pairs[tuple(x)] = (quotient_map(g, sec_a, x, cfg), quotient_map(g, sec_b, x, cfg))
        except (CanonicalizationError, IntegrationError, DomainError, ValueError):
            return False
        return True

    try:
        points = draw_valid(domain, n_samples, accept, seed=seed)
    except SamplingError as exc:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, None, str(exc))
    worst, witness = 0.0, None
    for x in points:
        qa, qb = pairs[tuple(x)]
        d = float(np.linalg.norm(np.asarray(transition(qa)) - qb))
        if witness is None or d > worst:
            worst, witness = d, x
    details = f"charts compared at {len(points)} overlap points"
    if worst < tol:
        return CheckReport(Verdict.PASS, Method.NUMERIC, worst, None, details)
    return CheckReport(Verdict.FAIL, Method.NUMERIC, worst, tuple(witness), details)
