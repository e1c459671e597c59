"""Command-line front end.

Each command loads a problem file, dispatches to one module-level check and
prints a JSON report on stdout (summary on stderr).  Exit codes: 0 all
checks pass, 1 any check fails, 2 usage or problem-file error, 3 a check is
inconclusive.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Callable

import numpy as np

from . import __version__
from .flow import IntegrationError, diagram_check, fiber_divergence
from .linear import (
    NoReductionError,
    RankDeficientError,
    enumerate_linear_reductions,
    field_linear_reductions,
    kernel_invariance_check,
    reduced_matrix,
)
from .liesym import (
    classify_projection,
    closure_check,
    fiber_consistency_check,
    fiber_mates,
    first_integral_check,
    invariance_check,
    is_symmetry,
    pushforward_sup,
)
from .problem import Problem, ProblemError, config_echo, load_problem
from .quotient import CanonicalizationError, canonicalize, verify_quotient_invariance
from .report import CheckReport, Method, Verdict, combine
from .sampling import SamplingError, draw_valid
from .vectorfield import ChartViolation, field_jacobian

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class Outcome:
    def __init__(self):
        self.checks: list[tuple[str, CheckReport]] = []
        self.results: dict = {}
        self.notes: list[str] = []

    def add(self, name: str, report: CheckReport):
        self.checks.append((name, report))


def _tol(p: Problem, key: str) -> float:
    return p.tolerances[key]


def cmd_check_symmetry(p: Problem, out: Outcome, threads: int):
    v = p.require("vector_field", "check-symmetry")
    g = p.require("generators", "check-symmetry")
    for i, w in enumerate(g.fields, 1):
        out.add(f"is_symmetry[w{i}]", is_symmetry(v, w, p.domain, _tol(p, "zero"), p.seed))
    for i, F in enumerate(p.first_integrals, 1):
        out.add(f"first_integral[F{i}]", first_integral_check(F, v, p.domain, _tol(p, "zero"), p.seed))


def cmd_check_closure(p: Problem, out: Outcome, threads: int):
    v = p.require("vector_field", "check-closure")
    g = p.require("generators", "check-closure")
    out.add("closure", closure_check(v, g, p.domain, p.samples, _tol(p, "closure"), p.seed))


def cmd_check_invariance(p: Problem, out: Outcome, threads: int):
    pi = p.require("projection", "check-invariance")
    g = p.require("generators", "check-invariance")
    out.add("invariance", invariance_check(pi, g, p.domain, _tol(p, "zero"), p.seed))


def cmd_check_fibers(p: Problem, out: Outcome, threads: int):
    pi = p.require("projection", "check-fibers")
    v = p.require("vector_field", "check-fibers")
    g = p.require("generators", "check-fibers")
    out.add(
        "fiber_consistency",
        fiber_consistency_check(pi, v, g, p.domain, p.n_fibers, _tol(p, "fiber"), p.seed,
                                cfg=p.integrator, threads=threads),
    )


def _fiber_divergence_report(p: Problem, T: float) -> CheckReport:
    v, pi, g = p.vector_field, p.projection, p.generators
    rng = np.random.default_rng(p.seed)
    bases = draw_valid(p.domain, p.n_fibers, pi.is_valid_point, seed=p.seed)
    worst, witness, pairs = 0.0, None, 0
    for x in bases:
        for y in fiber_mates(g, x, 1, rng, p.domain, pi, cfg=p.integrator):
            # group flows keep pi constant only up to integration error
            if np.linalg.norm(pi.difference(pi(x), pi(y))) >= 1e-10:
                continue
            d = fiber_divergence(v, pi, x, y, T, p.integrator)
            pairs += 1
            if witness is None or d > worst:
                worst, witness = d, (x, y)
    if witness is None:
        return CheckReport(Verdict.INCONCLUSIVE, Method.NUMERIC, 0.0, None, "no same-fiber pairs inside the domain")
    x, y = witness
    details = (f"max fiber divergence {worst:.3e} over {pairs} pairs, T={T:g}; worst pair "
               f"{[round(float(c), 6) for c in x]} vs {[round(float(c), 6) for c in y]}")
    if worst < _tol(p, "diagram"):
        return CheckReport(Verdict.PASS, Method.NUMERIC, worst, None, details)
    return CheckReport(Verdict.FAIL, Method.NUMERIC, worst, tuple(x), details)


def cmd_verify_diagram(p: Problem, out: Outcome, threads: int):
    v = p.require("vector_field", "verify-diagram")
    pi = p.require("projection", "verify-diagram")
    if p.reduced_field is None and p.generators is None:
        raise ProblemError("verify-diagram needs 'reduced_field' or 'generators' (for fiber pairs)", "$")
    if p.reduced_field is not None:
        x0s = p.initial_points or tuple(map(tuple, draw_valid(p.domain, 8, pi.is_valid_point, seed=p.seed)))
        out.add("diagram", diagram_check(v, pi, p.reduced_field, x0s, p.t_final, p.integrator,
                                         _tol(p, "diagram"), threads=threads))
    if p.generators is not None:
        out.add("fiber_divergence", _fiber_divergence_report(p, p.t_final))


def cmd_classify(p: Problem, out: Outcome, threads: int):
    v = p.require("vector_field", "classify")
    pi = p.require("projection", "classify")
    tol = _tol(p, "zero")
    kind = classify_projection(pi, v, p.domain, tol, p.samples, p.seed)
    sup, at = pushforward_sup(pi, v, p.domain, p.samples, p.seed)
    out.results["classification"] = kind.value
    out.add("classify", CheckReport(Verdict.PASS, Method.NUMERIC, sup, None,
                                    f"{kind.value}: max |pi_*(v)| = {sup:.3e} (tol {tol:g})"))


def cmd_reduce_linear(p: Problem, out: Outcome, threads: int):
    tol = _tol(p, "linear")
    if p.A is not None:
        A = p.A
        source = "matrices.A"
    else:
        v = p.require("vector_field", "reduce-linear")
        pts = p.linearize_at or (tuple([0.0] * len(p.coords)),)
        A = field_jacobian(v, pts[0])
        source = f"Jacobian of the vector field at {list(pts[0])}"
    out.results["matrix_source"] = source
    if p.P is not None:
        report, sc = kernel_invariance_check(A, p.P, tol)
        out.add("kernel_invariance", report)
        if report.passed:
            out.results["structure_constants"] = sc.K.tolist()
            out.results["reduced_matrix"] = reduced_matrix(A, p.P, tol).tolist()
        return
    if p.A is None and len(p.linearize_at) > 1:
        reductions = field_linear_reductions(p.vector_field, p.linearize_at, tol)
    else:
        reductions = enumerate_linear_reductions(A, tol)
    out.results["reductions"] = [r.to_dict() for r in reductions]
    if not reductions:
        out.notes.append("no real linear reduction")
    out.add("enumerate_linear_reductions", CheckReport(
        Verdict.PASS, Method.NUMERIC, 0.0, None, f"{len(reductions)} linear reduction(s) found"))


def cmd_quotient_build(p: Problem, out: Outcome, threads: int):
    g = p.require("generators", "quotient-build")
    sec = p.require("section", "quotient-build")
    pts = p.initial_points or tuple(map(tuple, p.domain.sample(min(p.samples, 16), p.seed)))
    table, failures = [], []
    for x in pts:
        try:
            y, eps = canonicalize(g, sec, x, cfg=p.integrator)
            table.append({"point": list(x), "representative": y.tolist(), "eps": eps.tolist(),
                          "chart": sec.chart_values(y).tolist()})
        except (CanonicalizationError, IntegrationError, ValueError) as exc:
            failures.append((x, str(exc)))
    out.results["quotient_table"] = table
    if failures:
        x, msg = failures[0]
        out.add("quotient_build", CheckReport(Verdict.FAIL, Method.NUMERIC, 0.0, x,
                                              f"{len(failures)} point(s) not canonicalized; first: {msg}"))
    else:
        out.add("quotient_build", CheckReport(Verdict.PASS, Method.NUMERIC, 0.0, None,
                                              f"{len(table)} points canonicalized"))


def cmd_quotient_verify(p: Problem, out: Outcome, threads: int):
    g = p.require("generators", "quotient-verify")
    sec = p.require("section", "quotient-verify")
    out.add("quotient_invariance", verify_quotient_invariance(
        g, sec, p.domain, min(p.samples, 32), _tol(p, "quotient"), p.seed, cfg=p.integrator,
        singular_points=p.singular_points, exclusion_radius=p.exclusion_radius))


COMMANDS: dict[str, Callable[[Problem, Outcome, int], None]] = {
    "check-symmetry": cmd_check_symmetry,
    "check-closure": cmd_check_closure,
    "check-invariance": cmd_check_invariance,
    "check-fibers": cmd_check_fibers,
    "verify-diagram": cmd_verify_diagram,
    "classify": cmd_classify,
    "reduce-linear": cmd_reduce_linear,
    "quotient-build": cmd_quotient_build,
    "quotient-verify": cmd_quotient_verify,
}

HELP = {
    "check-symmetry": "is each generator a symmetry of the vector field",
    "check-closure": "is the generator span closed under bracketing with the field",
    "check-invariance": "is the projection invariant under every generator",
    "check-fibers": "do trajectories starting on one fiber stay on one fiber",
    "verify-diagram": "does the projected flow match the reduced field's flow",
    "classify": "trivial or nontrivial reduced dynamics for the projection",
    "reduce-linear": "linear reductions from the Jacobian at the linearization points",
    "quotient-build": "canonicalize sample points onto the cross-section",
    "quotient-verify": "orbit constancy, idempotence and invariants of the quotient map",
}


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def build_report(command: str, p: Problem, out: Outcome, threads: int) -> tuple[dict, int]:
    summary = combine([r for _, r in out.checks])
    exit_code = {Verdict.PASS: EXIT_OK, Verdict.FAIL: EXIT_FAIL, Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}[summary.verdict]
    report = {
        "command": command,
        "problem": p.name,
        "checks": [{"name": name, **r.to_dict()} for name, r in out.checks],
        "results": out.results,
        "notes": out.notes,
        "summary": {"verdict": summary.verdict.value, "exit_code": exit_code},
        "provenance": {"tool": "projfiber", "version": __version__, "seed": p.seed,
                       "config": {**config_echo(p), "threads": threads}},
    }
    return _jsonable(report), exit_code


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="projfiber", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"projfiber {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("problem", help="problem file (JSON)")
        sp.add_argument("--tol", type=float, help="tolerance for this command's checks")
        sp.add_argument("--seed", type=int, help="sampling seed (overrides the problem file)")
        sp.add_argument("--samples", type=int, help="number of sample points")
        sp.add_argument("--t-final", type=float, dest="t_final", help="integration horizon")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (0 = one per CPU)")
        sp.add_argument("--report", help="also write the JSON report to this path")
    return ap


_TOL_KEYS = {
    "check-symmetry": ["zero"],
    "check-closure": ["closure"],
    "check-invariance": ["zero"],
    "check-fibers": ["fiber"],
    "verify-diagram": ["diagram"],
    "classify": ["zero"],
    "reduce-linear": ["linear"],
    "quotient-build": [],
    "quotient-verify": ["quotient"],
}


def _apply_flags(p: Problem, args) -> None:
    if args.tol is not None:
        if not args.tol > 0:
            raise ProblemError("--tol must be positive", "--tol")
        for key in _TOL_KEYS[args.command]:
            p.tolerances[key] = args.tol
    if args.seed is not None:
        if args.seed < 0:
            raise ProblemError("--seed must be nonnegative", "--seed")
        p.seed = args.seed
    if args.samples is not None:
        if args.samples < 1:
            raise ProblemError("--samples must be positive", "--samples")
        p.samples = args.samples
        p.n_fibers = min(p.n_fibers, args.samples)
    if args.t_final is not None:
        if not args.t_final > 0:
            raise ProblemError("--t-final must be positive", "--t-final")
        p.t_final = args.t_final
    if args.threads < 0:
        raise ProblemError("--threads must be >= 0", "--threads")


def run(command: str, problem_path: str, flags: list[str] | None = None, *, stdout=None, stderr=None) -> int:
    """Programmatic equivalent of ``projfiber COMMAND PROBLEM [flags]``."""
    return main([command, problem_path, *(flags or [])], stdout=stdout, stderr=stderr)


def main(argv: list[str] | None = None, *, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        p = load_problem(args.problem)
        _apply_flags(p, args)
        out = Outcome()
        COMMANDS[args.command](p, out, args.threads)
    except ProblemError as exc:
        print(f"projfiber: problem error: {exc}", file=stderr)
        return EXIT_USAGE
    except (NoReductionError, RankDeficientError, SamplingError, ChartViolation) as exc:
        print(f"projfiber: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_USAGE
    report, code = build_report(args.command, p, out, args.threads)
    text = dumps_report(report)
    stdout.write(text)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(f"{args.command} {args.problem}: {report['summary']['verdict']}", file=stderr)
    for name, r in out.checks:
        print(f"  {name}: {r.verdict.value} ({r.method.value}, residual {r.max_residual:.3g}) {r.details}", file=stderr)
    for note in out.notes:
        print(f"  note: {note}", file=stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
