"""Vector fields, Lie brackets, pushforwards and first prolongation."""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import (
    Const,
    DomainError,
    Expr,
    Sub,
    Sym,
    UndeclaredSymbolError,
    as_expr,
    compile_exprs,
    differentiate,
    is_symbolic_zero,
    parse,
    simplify,
    substitute,
    symbols_of,
)
from .expr.zerotest import SINGULAR_EPS

TIME = "t"


class CoordinateMismatch(ValueError):
    pass


class NonautonomousFieldError(ValueError):
    """A generator or field depends on time; only autonomous fields are supported."""


class ChartViolation(ValueError):
    """Point outside a projection's chart guards or at a singular point."""


def _parse_components(texts: Sequence[str], coords: Sequence[str]) -> tuple[Expr, ...]:
    out = []
    for text in texts:
        try:
            out.append(parse(text, coords) if isinstance(text, str) else as_expr(text))
        except UndeclaredSymbolError as exc:
            if exc.name == TIME:
                raise NonautonomousFieldError(
                    f"component {text!r} depends on time; only autonomous (time-independent) "
                    "fields are supported"
                ) from None
            raise
    return tuple(out)


@dataclass(frozen=True)
class VectorField:
    """``sum_a components[a] * d/d coords[a]``."""

    coords: tuple[str, ...]
    components: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "components", tuple(as_expr(c) for c in self.components))
        if len(self.coords) != len(self.components):
            raise CoordinateMismatch(
                f"{len(self.components)} components for {len(self.coords)} coordinates"
            )
        if len(set(self.coords)) != len(self.coords):
            raise CoordinateMismatch(f"duplicate coordinates in {self.coords}")
        extra = set().union(*(symbols_of(c) for c in self.components)) - set(self.coords)
        if extra:
            if TIME in extra:
                raise NonautonomousFieldError("field components depend on time")
            raise CoordinateMismatch(f"components use undeclared symbols {sorted(extra)}")

    @classmethod
    def parse(cls, coords: Sequence[str], components: Sequence[str]) -> "VectorField":
        coords = tuple(coords)
        return cls(coords, _parse_components(components, coords))

    @classmethod
    def zero(cls, coords: Sequence[str]) -> "VectorField":
        return cls(tuple(coords), tuple(Const(0.0) for _ in coords))

    @classmethod
    def linear(cls, A, coords: Sequence[str]) -> "VectorField":
        """Field of ``x' = A x``."""
        A = np.asarray(A, dtype=float)
        coords = tuple(coords)
        if A.shape != (len(coords), len(coords)):
            raise CoordinateMismatch(f"matrix shape {A.shape} does not match {len(coords)} coordinates")
        return cls(coords, linear_forms(A, coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def _compiled(self):
        return compile_exprs(self.components, self.coords)

    def __call__(self, x) -> np.ndarray:
        return self._compiled(x)

    def is_zero_field(self) -> bool:
        return all(is_symbolic_zero(c) for c in self.components)

    def simplified(self) -> "VectorField":
        return VectorField(self.coords, tuple(simplify(c) for c in self.components))

    def scaled(self, s: float) -> "VectorField":
        return VectorField(self.coords, tuple(simplify(as_expr(s) * c) for c in self.components))

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_coords(self, other)
        return VectorField(self.coords, tuple(simplify(a + b) for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_coords(self, other)
        return VectorField(self.coords, tuple(simplify(a - b) for a, b in zip(self.components, other.components)))

    def __str__(self) -> str:
        return " + ".join(f"({c}) d/d{x}" for c, x in zip(self.components, self.coords))

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.components]


def linear_forms(M, coords: Sequence[str]) -> tuple[Expr, ...]:
    """One expression ``sum_j M[i, j] * coords[j]`` per row of ``M``."""
    out = []
    for row in np.atleast_2d(M):
        e: Expr = Const(0.0)
        for a, c in zip(row, coords):
            if a != 0:
                e = e + as_expr(float(a)) * Sym(c)
        out.append(simplify(e))
    return tuple(out)


def _same_coords(v: VectorField, w: VectorField) -> None:
    if v.coords != w.coords:
        raise CoordinateMismatch(f"fields live on different coordinates: {v.coords} vs {w.coords}")


def apply(w: VectorField, F: Expr) -> Expr:
    """Directional derivative ``w(F) = sum_b w^b dF/dx^b``."""
    return simplify(_apply_raw(w, F))


def _apply_raw(w: VectorField, F: Expr) -> Expr:
    extra = symbols_of(F) - set(w.coords)
    if extra:
        raise CoordinateMismatch(f"function uses symbols {sorted(extra)} not among field coordinates")
    total: Expr = Const(0.0)
    for eta, c in zip(w.components, w.coords):
        if is_symbolic_zero(eta):
            continue
        dF = differentiate(F, c)
        if is_symbolic_zero(dF):
            continue
        total = total + eta * dF
    return total


def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    """``[v, w]^a = v(w^a) - w(v^a)``."""
    _same_coords(v, w)
    comps = tuple(simplify(Sub(_apply_raw(v, wa), _apply_raw(w, va))) for va, wa in zip(v.components, w.components))
    return VectorField(v.coords, comps)


# --- projections ---------------------------------------------------------------------

_GUARD_RE = re.compile(r"^(?P<lhs>.+?)\s*(?P<op>!=|>=|<=|>|<)\s*(?P<rhs>.+)$")
_GUARD_OPS = {">": operator.gt, "<": operator.lt, ">=": operator.ge, "<=": operator.le}


@dataclass(frozen=True)
class Guard:
    """Chart condition ``expr op 0`` with op in {!=, >, <, >=, <=}."""

    expr: Expr
    op: str
    text: str = ""

    @classmethod
    def parse(cls, text: str, coords: Sequence[str]) -> "Guard":
        m = _GUARD_RE.match(text.strip())
        if m is None:
            raise ValueError(f"guard {text!r} is not of the form 'lhs OP rhs'")
        lhs = parse(m.group("lhs"), coords)
        rhs = parse(m.group("rhs"), coords)
        return cls(simplify(Sub(lhs, rhs)), m.group("op"), text.strip())

    def holds(self, value: float, margin: float = SINGULAR_EPS) -> bool:
        if self.op == "!=":
            return abs(value) > margin
        return _GUARD_OPS[self.op](value, 0.0)


@dataclass(frozen=True)
class ProjectionMap:
    """Smooth map from ``source_coords`` to ``len(components)`` target coordinates.

    ``periods[i]`` is the period of an angle-valued target component (e.g.
    ``2*pi`` for an angle chart) or None; residuals along periodic components
    are measured by shortest arc.
    """

    source_coords: tuple[str, ...]
    components: tuple[Expr, ...]
    target_coords: tuple[str, ...] = ()
    guards: tuple[Guard, ...] = ()
    periods: tuple[float | None, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source_coords", tuple(self.source_coords))
        object.__setattr__(self, "components", tuple(as_expr(c) for c in self.components))
        n = len(self.components)
        targets = tuple(self.target_coords) or tuple(f"y{i + 1}" for i in range(n))
        object.__setattr__(self, "target_coords", targets)
        object.__setattr__(self, "guards", tuple(self.guards))
        periods = tuple(self.periods) or (None,) * n
        object.__setattr__(self, "periods", periods)
        if len(targets) != n or len(periods) != n:
            raise CoordinateMismatch("target coordinates/periods do not match component count")
        if n > len(self.source_coords):
            raise CoordinateMismatch(f"projection to {n} > {len(self.source_coords)} dimensions")
        extra = set().union(*(symbols_of(c) for c in self.components), *(symbols_of(g.expr) for g in self.guards))
        extra -= set(self.source_coords)
        if extra:
            raise CoordinateMismatch(f"projection uses undeclared symbols {sorted(extra)}")

    @classmethod
    def parse(
        cls,
        source_coords: Sequence[str],
        components: Sequence[str],
        target_coords: Sequence[str] = (),
        guards: Sequence[str] = (),
        periods: Sequence[float | None] = (),
    ) -> "ProjectionMap":
        src = tuple(source_coords)
        return cls(
            src,
            _parse_components(components, src),
            tuple(target_coords),
            tuple(Guard.parse(g, src) for g in guards),
            tuple(periods),
        )

    @classmethod
    def linear(cls, P, coords: Sequence[str]) -> "ProjectionMap":
        P = np.atleast_2d(np.asarray(P, dtype=float))
        coords = tuple(coords)
        if P.shape[1] != len(coords):
            raise CoordinateMismatch(f"matrix has {P.shape[1]} columns for {len(coords)} coordinates")
        return cls(coords, linear_forms(P, coords))

    @property
    def dim_source(self) -> int:
        return len(self.source_coords)

    @property
    def dim_target(self) -> int:
        return len(self.components)

    @cached_property
    def _compiled(self):
        return compile_exprs(self.components, self.source_coords, singular_eps=0.0)

    @cached_property
    def _guard_fn(self):
        return compile_exprs([g.expr for g in self.guards], self.source_coords)

    @cached_property
    def jacobian_exprs(self) -> tuple[tuple[Expr, ...], ...]:
        return tuple(tuple(differentiate(c, s) for s in self.source_coords) for c in self.components)

    @cached_property
    def _jacobian_compiled(self):
        flat = [e for row in self.jacobian_exprs for e in row]
        return compile_exprs(flat, self.source_coords, singular_eps=SINGULAR_EPS)

    def in_chart(self, x) -> bool:
        if not self.guards:
            return True
        try:
            values = self._guard_fn(x)
        except DomainError:
            return False
        return all(g.holds(float(v)) for g, v in zip(self.guards, values))

    def check_point(self, x) -> None:
        if not self.in_chart(x):
            raise ChartViolation(f"point {tuple(map(float, x))} violates chart guards "
                                 f"{[g.text or str(g.expr) for g in self.guards]}")

    def __call__(self, x) -> np.ndarray:
        self.check_point(x)
        try:
            return self._compiled(x)
        except DomainError as exc:
            raise ChartViolation(f"projection singular at {tuple(map(float, x))}: {exc}") from None

    def jacobian(self, x) -> np.ndarray:
        self.check_point(x)
        try:
            J = self._jacobian_compiled(x)
        except DomainError as exc:
            raise ChartViolation(f"projection Jacobian singular at {tuple(map(float, x))}: {exc}") from None
        return J.reshape(self.dim_target, self.dim_source)

    def is_valid_point(self, x) -> bool:
        try:
            self.jacobian(x)
            self(x)
        except ChartViolation:
            return False
        return True

    def difference(self, a, b) -> np.ndarray:
        """Target-space difference ``a - b``, wrapped on periodic components."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for i, period in enumerate(self.periods):
            if period:
                d[i] = (d[i] + 0.5 * period) % period - 0.5 * period
        return d

    def rank_fraction(self, points, tol: float = 1e-8) -> float:
        """Fraction of valid points where the Jacobian has full row rank."""
        good = total = 0
        for x in points:
            try:
                J = self.jacobian(x)
            except ChartViolation:
                continue
            total += 1
            s = np.linalg.svd(J, compute_uv=False)
            if s.size and s[-1] > tol * max(1.0, s[0]):
                good += 1
        return good / total if total else 0.0


def _fd_jacobian(pi: ProjectionMap, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    J = np.empty((pi.dim_target, pi.dim_source))
    for j in range(pi.dim_source):
        step = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        J[:, j] = pi.difference(pi(xp), pi(xm)) / (2 * step)
    return J


class JacobianMismatch(AssertionError):
    pass


def pushforward(pi: ProjectionMap, v: VectorField, x, *, cross_check: bool = True, fd_rtol: float = 1e-5) -> np.ndarray:
    """``pi_*(v|_x) = Dpi(x) v(x)``.

    With ``cross_check`` the symbolic Jacobian is compared against central
    finite differences; a disagreement raises :class:`JacobianMismatch`.
    """
    if pi.source_coords != v.coords:
        raise CoordinateMismatch(f"projection on {pi.source_coords}, field on {v.coords}")
    x = np.asarray(x, dtype=float)
    J = pi.jacobian(x)
    if cross_check:
        try:
            J_fd = _fd_jacobian(pi, x)
        except ChartViolation:
            J_fd = None
        if J_fd is not None:
            err = np.max(np.abs(J - J_fd))
            if err > fd_rtol * max(1.0, np.max(np.abs(J))):
                raise JacobianMismatch(f"symbolic and finite-difference Jacobians differ by {err:g} at {tuple(x)}")
    return J @ v(x)


# --- Lie bases -----------------------------------------------------------------------


@dataclass(frozen=True)
class LieBasis:
    """Ordered generators ``w_1..w_k`` on shared coordinates (k may be 0)."""

    coords: tuple[str, ...]
    fields: tuple[VectorField, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "fields", tuple(self.fields))
        for w in self.fields:
            if w.coords != self.coords:
                raise CoordinateMismatch(f"generator on {w.coords}, basis on {self.coords}")

    @classmethod
    def of(cls, *fields: VectorField) -> "LieBasis":
        if not fields:
            raise ValueError("use LieBasis(coords) for an empty basis")
        return cls(fields[0].coords, tuple(fields))

    @classmethod
    def parse(cls, coords: Sequence[str], generators: Sequence[Sequence[str]]) -> "LieBasis":
        return cls(tuple(coords), tuple(VectorField.parse(coords, g) for g in generators))

    @property
    def k(self) -> int:
        return len(self.fields)

    def __len__(self) -> int:
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def matrix(self, x) -> np.ndarray:
        """k x m matrix of generator values at ``x``."""
        if not self.fields:
            return np.zeros((0, len(self.coords)))
        return np.array([w(x) for w in self.fields])

    def rank_at(self, x, tol: float = 1e-8) -> int:
        M = self.matrix(x)
        if M.size == 0:
            return 0
        s = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(s > tol * max(1.0, s[0])))

    def is_regular_at(self, x, tol: float = 1e-8) -> bool:
        return self.rank_at(x, tol) == self.k


# --- prolongation --------------------------------------------------------------------


def dot_name(c: str) -> str:
    return f"{c}_dot"


@dataclass(frozen=True)
class ProlongedField:
    """First prolongation of an autonomous field on ``(t, x, xdot)`` coordinates."""

    base: VectorField
    field: VectorField

    @property
    def coords(self) -> tuple[str, ...]:
        return self.field.coords

    @property
    def t_component(self) -> Expr:
        return self.field.components[0]

    @property
    def x_components(self) -> tuple[Expr, ...]:
        m = self.base.dim
        return self.field.components[1 : 1 + m]

    @property
    def xdot_components(self) -> tuple[Expr, ...]:
        m = self.base.dim
        return self.field.components[1 + m :]


def _jet_coords(coords: Sequence[str]) -> tuple[str, ...]:
    dots = tuple(dot_name(c) for c in coords)
    clash = (set(dots) | {TIME}) & set(coords)
    if clash:
        raise CoordinateMismatch(f"coordinate names {sorted(clash)} collide with jet coordinates")
    return (TIME, *coords, *dots)


def prolong1(w: VectorField) -> ProlongedField:
    """``pr1 w = w + sum_a (sum_b xdot^b d eta^a / d x^b) d/d xdot^a`` (no time component)."""
    jet = _jet_coords(w.coords)
    dots = [Sym(dot_name(c)) for c in w.coords]
    lifted = []
    for eta in w.components:
        total: Expr = Const(0.0)
        for c, xd in zip(w.coords, dots):
            d = differentiate(eta, c)
            if not is_symbolic_zero(d):
                total = total + xd * d
        lifted.append(simplify(total))
    return ProlongedField(w, VectorField(jet, (Const(0.0), *w.components, *lifted)))


def prolong_apply_to_system(w: VectorField, v: VectorField) -> VectorField:
    """Apply ``pr1 w`` to ``xdot - xi(x)`` and substitute ``xdot = xi(x)``.

    For autonomous ``v = xi`` the result equals ``[v, w]``.
    """
    _same_coords(v, w)
    pr = prolong1(w)
    on_shell = {dot_name(c): xi for c, xi in zip(v.coords, v.components)}
    comps = []
    for c, xi in zip(v.coords, v.components):
        residual = Sub(Sym(dot_name(c)), xi)
        value = apply(pr.field, residual)
        comps.append(simplify(substitute(value, on_shell)))
    return VectorField(v.coords, tuple(comps))


def field_jacobian_exprs(v: VectorField) -> tuple[tuple[Expr, ...], ...]:
    return tuple(tuple(differentiate(c, s) for s in v.coords) for c in v.components)


def field_jacobian(v: VectorField, x) -> np.ndarray:
    """Numeric Jacobian ``d v^a / d x^b`` at ``x`` from the symbolic derivatives."""
    rows = field_jacobian_exprs(v)
    f = compile_exprs([e for row in rows for e in row], v.coords)
    return f(x).reshape(v.dim, v.dim)
