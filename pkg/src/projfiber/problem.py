"""Problem-file ingestion: JSON schema validation, then dimensional consistency."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .expr import Expr, ParseError, UndeclaredSymbolError
from .flow import IntegratorConfig
from .quotient import CrossSection
from .sampling import Box
from .vectorfield import (
    CoordinateMismatch,
    Guard,
    LieBasis,
    NonautonomousFieldError,
    ProjectionMap,
    VectorField,
    _parse_components,
)

DEFAULT_TOLERANCES = {
    "zero": 1e-9,
    "closure": 1e-8,
    "fiber": 1e-7,
    "diagram": 1e-7,
    "linear": 1e-8,
    "quotient": 1e-5,
}


class ProblemError(ValueError):
    """Invalid problem file; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


def load_schema() -> dict:
    text = resources.files("projfiber").joinpath("schema/problem.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


@dataclass
class Problem:
    coords: tuple[str, ...]
    name: str = ""
    vector_field: VectorField | None = None
    generators: LieBasis | None = None
    projection: ProjectionMap | None = None
    reduced_field: VectorField | None = None
    first_integrals: tuple[Expr, ...] = ()
    A: np.ndarray | None = None
    P: np.ndarray | None = None
    linearize_at: tuple[tuple[float, ...], ...] = ()
    section: CrossSection | None = None
    singular_points: tuple[tuple[float, ...], ...] = ()
    exclusion_radius: float = 1e-3
    domain: Box | None = None
    initial_points: tuple[tuple[float, ...], ...] = ()
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    samples: int = 128
    n_fibers: int = 16
    t_final: float = 5.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    raw: dict = field(default_factory=dict)

    def require(self, attr: str, command: str):
        value = getattr(self, attr)
        if value is None or (isinstance(value, tuple) and not value):
            raise ProblemError(f"command {command!r} needs '{attr}' in the problem file", f"$.{attr}")
        return value


def _wrap(path: str, fn, *args):
    try:
        return fn(*args)
    except (ParseError, UndeclaredSymbolError, NonautonomousFieldError, CoordinateMismatch, ValueError) as exc:
        raise ProblemError(str(exc), path) from None


def _exprs(path: str, texts, coords) -> tuple[Expr, ...]:
    """Parse each expression string, reporting errors at its own index."""
    return tuple(_wrap(f"{path}[{i}]", _parse_components, [t], coords)[0] for i, t in enumerate(texts))


def _guards(path: str, texts, coords) -> tuple[Guard, ...]:
    return tuple(_wrap(f"{path}[{i}]", Guard.parse, t, coords) for i, t in enumerate(texts))


def parse_problem(data: dict) -> Problem:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ProblemError(first.message, _json_path(first.absolute_path))

    coords = tuple(data["coords"])
    m = len(coords)
    p = Problem(coords=coords, name=data.get("name", ""), raw=data)

    if "vector_field" in data:
        comps = data["vector_field"]
        if len(comps) != m:
            raise ProblemError(f"{len(comps)} components for {m} coordinates", "$.vector_field")
        p.vector_field = _wrap("$.vector_field", VectorField, coords, _exprs("$.vector_field", comps, coords))
    if "generators" in data:
        fields = []
        for i, g in enumerate(data["generators"]):
            if len(g) != m:
                raise ProblemError(f"{len(g)} components for {m} coordinates", f"$.generators[{i}]")
            fields.append(_wrap(f"$.generators[{i}]", VectorField, coords, _exprs(f"$.generators[{i}]", g, coords)))
        p.generators = LieBasis(coords, tuple(fields))
    if "projection" in data:
        pr = data["projection"]
        n = len(pr["components"])
        for key in ("target_coords", "periods"):
            if key in pr and len(pr[key]) != n:
                raise ProblemError(f"{len(pr[key])} entries for {n} projection components", f"$.projection.{key}")
        if n > m:
            raise ProblemError(f"projection to {n} > {m} dimensions", "$.projection.components")
        p.projection = _wrap(
            "$.projection", ProjectionMap, coords, _exprs("$.projection.components", pr["components"], coords),
            tuple(pr.get("target_coords", ())), _guards("$.projection.guards", pr.get("guards", ()), coords),
            tuple(pr.get("periods", ())),
        )
    if "reduced_field" in data:
        if p.projection is None:
            raise ProblemError("a reduced field needs a projection", "$.reduced_field")
        targets = p.projection.target_coords
        if len(data["reduced_field"]) != len(targets):
            raise ProblemError(f"{len(data['reduced_field'])} components for {len(targets)} target coordinates", "$.reduced_field")
        p.reduced_field = _wrap(
            "$.reduced_field", VectorField, targets, _exprs("$.reduced_field", data["reduced_field"], targets)
        )
    if "first_integrals" in data:
        p.first_integrals = _exprs("$.first_integrals", data["first_integrals"], coords)

    mats = data.get("matrices", {})
    if "A" in mats:
        A = np.array(mats["A"], dtype=float) if all(len(r) == len(mats["A"][0]) for r in mats["A"]) else None
        if A is None or A.shape != (m, m):
            raise ProblemError(f"A must be {m}x{m}", "$.matrices.A")
        p.A = A
    if "P" in mats:
        rows = mats["P"]
        if any(len(r) != m for r in rows):
            raise ProblemError(f"P must have {m} columns", "$.matrices.P")
        p.P = np.array(rows, dtype=float)

    for key in ("linearize_at", "initial_points"):
        pts = data.get(key, [])
        for i, pt in enumerate(pts):
            if len(pt) != m:
                raise ProblemError(f"point has {len(pt)} coordinates, expected {m}", f"$.{key}[{i}]")
        setattr(p, key, tuple(tuple(map(float, pt)) for pt in pts))

    if "domain" in data:
        dom = data["domain"]
        if set(dom) != set(coords):
            raise ProblemError(f"domain must bound exactly {list(coords)}", "$.domain")
        for c in coords:
            lo, hi = dom[c]
            if not lo < hi:
                raise ProblemError(f"empty interval [{lo}, {hi}]", f"$.domain.{c}")
        p.domain = _wrap("$.domain", Box.from_bounds, dom, coords)
    else:
        p.domain = Box.cube(coords)

    if "section" in data:
        sec = data["section"]
        p.section = _wrap(
            "$.section", CrossSection, coords,
            _exprs("$.section.constraints", sec["constraints"], coords),
            _exprs("$.section.chart", sec["chart"], coords),
            None,
            _guards("$.section.guards", sec.get("guards", ()), coords),
        )
        if p.generators is not None and p.generators.k != p.section.k:
            raise ProblemError(f"{p.section.k} constraints for {p.generators.k} generators", "$.section.constraints")
        for i, pt in enumerate(sec.get("singular_points", [])):
            if len(pt) != m:
                raise ProblemError(f"point has {len(pt)} coordinates, expected {m}", f"$.section.singular_points[{i}]")
        p.singular_points = tuple(tuple(map(float, pt)) for pt in sec.get("singular_points", []))
        p.exclusion_radius = float(sec.get("exclusion_radius", 1e-3))

    p.seed = int(data.get("seed", 0))
    p.tolerances.update(data.get("tolerances", {}))
    p.samples = int(data.get("samples", p.samples))
    p.n_fibers = int(data.get("n_fibers", p.n_fibers))
    p.t_final = float(data.get("t_final", p.t_final))
    integ = dict(data.get("integrator", {}))
    p.integrator = _wrap("$.integrator", lambda: IntegratorConfig(**integ))
    return p


def load_problem(path) -> Problem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemError(f"cannot read problem file: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    if not isinstance(data, dict):
        raise ProblemError("top level must be a JSON object")
    return parse_problem(data)


def config_echo(p: Problem) -> dict:
    cfg = p.integrator
    return {
        "seed": p.seed,
        "samples": p.samples,
        "n_fibers": p.n_fibers,
        "t_final": p.t_final,
        "tolerances": dict(sorted(p.tolerances.items())),
        "domain": p.domain.to_dict() if p.domain else None,
        "integrator": {
            "method": cfg.method,
            "rel_tol": cfg.rel_tol,
            "abs_tol": cfg.abs_tol,
            "max_step": cfg.max_step if math.isfinite(cfg.max_step) else None,
            "max_steps": cfg.max_steps,
        },
    }
