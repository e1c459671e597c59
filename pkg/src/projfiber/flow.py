"""Flows of vector fields and trajectory-level commuting-diagram checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .expr import DomainError
from .report import CheckReport, Method, Verdict, parallel_map
from .vectorfield import ChartViolation, CoordinateMismatch, LieBasis, ProjectionMap, VectorField, pushforward

N_CHECKPOINTS = 17
ESCAPE_GROWTH = 1e6

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class IntegrationError(RuntimeError):
    pass


class StepLimitError(IntegrationError):
    pass


class BlowUpError(IntegrationError):
    def __init__(self, message: str, escape_time: float):
        self.escape_time = escape_time
        super().__init__(f"{message} (escape time t={escape_time:g})")


@dataclass(frozen=True)
class IntegratorConfig:
    """``method`` is ``"rk45"`` (adaptive Dormand-Prince) or ``"rk4"``.

    The fixed-step RK4 uses ``max_step`` as its step (0.01 when unbounded).
    """

    method: str = "rk45"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0 and self.max_steps > 0):
            raise ValueError("integrator tolerances, max_step and max_steps must be positive")

    @property
    def fixed_step(self) -> float:
        return self.max_step if math.isfinite(self.max_step) else 1e-2


@dataclass(frozen=True)
class Trajectory:
    """Accepted steps of an integration with cubic Hermite interpolation between them."""

    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    def __call__(self, t: float) -> np.ndarray:
        ts = self.t
        if t < ts[0] - 1e-12 * max(1.0, abs(ts[0])) or t > ts[-1] + 1e-12 * max(1.0, abs(ts[-1])):
            raise ValueError(f"t={t} outside trajectory span [{ts[0]}, {ts[-1]}]")
        i = int(np.searchsorted(ts, t))
        if i < len(ts) and ts[i] == t:
            return self.y[i].copy()
        i = min(max(i, 1), len(ts) - 1)
        t0, t1 = ts[i - 1], ts[i]
        h = t1 - t0
        s = (t - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * self.y[i - 1] + h10 * h * self.dy[i - 1] + h01 * self.y[i] + h11 * h * self.dy[i]

    def to_csv(self, path, coords: Sequence[str]) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *coords])
            for t, y in zip(self.t, self.y):
                writer.writerow([repr(float(t)), *(repr(float(v)) for v in y)])


def _rhs_of(v) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(v, VectorField):
        return v
    return lambda x: np.asarray(v(x), dtype=float)


def _initial_step(f, t_dir_f0, y0, rtol, atol, order=5) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((t_dir_f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * t_dir_f0
    f1 = f(y1)
    d2 = np.sqrt(np.mean(((f1 - t_dir_f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / (order + 1))
    return min(100 * h0, h1)


def _stops(t0: float, t1: float, checkpoints) -> list[float]:
    pts = sorted({float(c) for c in (checkpoints if checkpoints is not None else ()) if t0 < c < t1})
    return pts + [t1]


def _integrate_forward(f, y0, t0, t1, cfg: IntegratorConfig, checkpoints) -> Trajectory:
    y = np.array(y0, dtype=float)
    t = float(t0)
    try:
        fy = f(y)
    except DomainError as exc:
        raise IntegrationError(f"field singular at the initial point: {exc}") from None
    ts, ys, dys = [t], [y.copy()], [fy.copy()]
    if t1 == t0:
        return Trajectory(np.array(ts), np.array(ys), np.array(dys))
    stops = _stops(t0, t1, checkpoints)
    stop_i = 0
    steps = 0
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    if cfg.method == "rk4":
        h_nominal = cfg.fixed_step
        while stop_i < len(stops):
            target = stops[stop_i]
            h = min(h_nominal, target - t)
            landing = h >= target - t - 1e-14 * max(1.0, abs(target))
            if landing:
                h = target - t
            try:
                k1 = fy
                k2 = f(y + 0.5 * h * k1)
                k3 = f(y + 0.5 * h * k2)
                k4 = f(y + h * k3)
            except DomainError as exc:
                raise BlowUpError(f"field singular along trajectory: {exc}", t) from None
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = target if landing else t + h
            if landing:
                stop_i += 1
            if not np.all(np.isfinite(y)):
                raise BlowUpError("non-finite state", t)
            try:
                fy = f(y)
            except DomainError as exc:
                raise BlowUpError(f"field singular along trajectory: {exc}", t) from None
            ts.append(t)
            ys.append(y.copy())
            dys.append(fy.copy())
            steps += 1
            if steps > cfg.max_steps:
                raise StepLimitError(f"exceeded {cfg.max_steps} steps at t={t:g}")
        return Trajectory(np.array(ts), np.array(ys), np.array(dys))

    h_prop = min(_initial_step(f, fy, y, rtol, atol), cfg.max_step, t1 - t0)
    k = np.empty((7, y.size))
    rejected_last = False
    while stop_i < len(stops):
        target = stops[stop_i]
        h = min(h_prop, cfg.max_step)
        landing = h >= target - t - 1e-14 * max(1.0, abs(target))
        if landing:
            h = target - t
        if not landing and h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            # step collapse on a grown state is a finite-time singularity
            if np.max(np.abs(y)) > ESCAPE_GROWTH * max(1.0, float(np.max(np.abs(y0)))):
                raise BlowUpError("solution escapes to infinity", t)
            raise IntegrationError(f"step size underflow at t={t:g}")
        try:
            k[0] = fy
            for s in range(1, 7):
                k[s] = f(y + h * np.dot(_A[s], k[:s]))
        except DomainError:
            h_prop = 0.25 * h
            rejected_last = True
            continue
        y_new = y + h * (_B @ k)
        if not np.all(np.isfinite(y_new)):
            h_prop = 0.25 * h
            rejected_last = True
            if h_prop < 1e-14:
                raise BlowUpError("non-finite state", t)
            continue
        err_vec = h * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        steps += 1
        if steps > cfg.max_steps:
            raise StepLimitError(f"exceeded {cfg.max_steps} steps at t={t:g}")
        if err <= 1.0:
            t = target if landing else t + h
            if landing:
                stop_i += 1
            y = y_new
            fy = k[6].copy()  # FSAL
            ts.append(t)
            ys.append(y.copy())
            dys.append(fy.copy())
            if np.max(np.abs(y)) > 1e150:
                raise BlowUpError("state magnitude exceeded 1e150", t)
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err**-0.2))
            if rejected_last:
                factor = min(factor, 1.0)
            rejected_last = False
            if landing:
                # a clipped step says little about the natural step size
                h_prop = min(h_prop, h * factor) if factor < 1.0 else h_prop
            else:
                h_prop = h * factor
        else:
            h_prop = h * max(0.2, 0.9 * err**-0.2)
            rejected_last = True
    return Trajectory(np.array(ts), np.array(ys), np.array(dys))


def integrate(v, x0, t_span, cfg: IntegratorConfig | None = None, checkpoints=None) -> Trajectory:
    """Integrate ``x' = v(x)`` from ``x0`` over ``t_span = (t0, t1)``.

    ``v`` is a :class:`VectorField` or any callable returning the velocity.
    Steps land exactly on every time in ``checkpoints``.  For ``t1 < t0`` the
    flow is run backwards; the returned trajectory still has increasing times.
    """
    cfg = cfg or IntegratorConfig()
    f = _rhs_of(v)
    t0, t1 = float(t_span[0]), float(t_span[1])
    x0 = np.asarray(x0, dtype=float)
    if isinstance(v, VectorField) and x0.shape != (v.dim,):
        raise CoordinateMismatch(f"initial point has shape {x0.shape}, field has dimension {v.dim}")
    if t1 >= t0:
        return _integrate_forward(f, x0, t0, t1, cfg, checkpoints)
    back = lambda x: -f(x)  # noqa: E731
    cps = None if checkpoints is None else [t0 - c for c in checkpoints]
    tr = _integrate_forward(back, x0, 0.0, t0 - t1, cfg, cps)
    return Trajectory(t0 - tr.t[::-1], tr.y[::-1].copy(), -tr.dy[::-1])


def flow_map(v, x0, t: float, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """``exp(t v)(x0)``."""
    if t == 0:
        return np.array(x0, dtype=float)
    tr = integrate(v, x0, (0.0, t), cfg)
    return tr.y[0].copy() if t < 0 else tr.y[-1].copy()


def group_flow(g: LieBasis, eps, x0, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """``exp(eps_1 w_1) o ... o exp(eps_k w_k) (x0)``; ``w_k`` acts first."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.shape != (g.k,):
        raise ValueError(f"need {g.k} flow parameters, got {eps.shape}")
    x = np.array(x0, dtype=float)
    for w, e in reversed(list(zip(g.fields, eps))):
        if e != 0:
            x = flow_map(w, x, float(e), cfg)
    return x


def checkpoints(T: float, n: int = N_CHECKPOINTS) -> np.ndarray:
    return np.linspace(0.0, T, n)


def diagram_check(
    v: VectorField,
    pi: ProjectionMap,
    w_reduced: VectorField,
    x0s,
    T: float,
    cfg: IntegratorConfig | None = None,
    tol: float = 1e-7,
    *,
    threads: int = 1,
) -> CheckReport:
    """Compare ``pi(exp(t v) x0)`` against ``exp(t w_reduced)(pi(x0))`` at 17 checkpoints.

    Also checks pi-relatedness ``pi_*(v|_x) = w_reduced(pi(x))`` at every
    checkpoint state.  Angle-valued target components wrap by shortest arc.
    """
    if w_reduced.coords != pi.target_coords:
        raise CoordinateMismatch(f"reduced field on {w_reduced.coords}, projection targets {pi.target_coords}")
    cfg = cfg or IntegratorConfig()
    ts = checkpoints(T)

    def one(x0):
        x0 = np.asarray(x0, dtype=float)
        full = integrate(v, x0, (0.0, T), cfg, ts)
        red = integrate(w_reduced, pi(x0), (0.0, T), cfg, ts)
        traj_res = rel_res = 0.0
        for t in ts:
            x = full(t)
            traj_res = max(traj_res, float(np.linalg.norm(pi.difference(pi(x), red(t)))))
            pushed = pushforward(pi, v, x, cross_check=False)
            rel_res = max(rel_res, float(np.linalg.norm(pushed - w_reduced(pi(x)))))
        return traj_res, rel_res

    try:
        results = parallel_map(one, list(x0s), threads)
    except (IntegrationError, ChartViolation, DomainError) as exc:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, math.inf, None, f"integration failed: {exc}")
    worst = max(range(len(results)), key=lambda i: max(results[i]))
    traj_res = max(r[0] for r in results)
    rel_res = max(r[1] for r in results)
    residual = max(traj_res, rel_res)
    details = f"trajectory residual {traj_res:.3e}, relatedness residual {rel_res:.3e} over T={T:g}"
    if residual < tol:
        return CheckReport(Verdict.PASS, Method.NUMERIC, residual, None, details)
    return CheckReport(Verdict.FAIL, Method.NUMERIC, residual, tuple(np.asarray(list(x0s)[worst], float)), details)


def fiber_divergence(
    v: VectorField,
    pi: ProjectionMap,
    x,
    y,
    T: float,
    cfg: IntegratorConfig | None = None,
    *,
    same_fiber_tol: float = 1e-10,
) -> float:
    """``sup_t |pi(exp(t v) x) - pi(exp(t v) y)|`` over 17 checkpoints.

    Both trajectories are integrated as one stacked system so they share the
    step sequence; for a genuine fiber map the projected states then agree
    to round-off rather than to integration tolerance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gap = float(np.linalg.norm(pi.difference(pi(x), pi(y))))
    if gap >= same_fiber_tol:
        raise ValueError(f"points are not on the same fiber (|pi(x) - pi(y)| = {gap:.3e})")
    m = v.dim
    stacked = lambda z: np.concatenate([v(z[:m]), v(z[m:])])  # noqa: E731
    ts = checkpoints(T)
    tr = integrate(stacked, np.concatenate([x, y]), (0.0, T), cfg, ts)
    worst = 0.0
    for t in ts:
        z = tr(t)
        worst = max(worst, float(np.linalg.norm(pi.difference(pi(z[:m]), pi(z[m:])))))
    return worst
