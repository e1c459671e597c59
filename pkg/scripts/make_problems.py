"""Regenerate the bundled problem files in problems/.

    python scripts/make_problems.py [outdir]
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

from projfiber.expr import Sym, as_expr, simplify, to_string
from projfiber.linear import complement_rows
from projfiber.systems import lorenz_rossler

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "problems"

TWO_PI = 2 * math.pi
ROT = [[0.0, -1.0], [1.0, 0.0]]


def circle():
    return {
        "name": "circle",
        "description": "x' = -y, y' = x with the scaling symmetry; angle chart onto S^1",
        "coords": ["x", "y"],
        "vector_field": ["-y", "x"],
        "generators": [["x", "y"]],
        "first_integrals": ["x^2 + y^2"],
        "projection": {"components": ["atan2(y, x)"], "target_coords": ["theta"], "periods": [TWO_PI]},
        "reduced_field": ["1"],
        "matrices": {"A": ROT},
        "section": {
            "constraints": ["x^2 + y^2 - 1"],
            "chart": ["atan2(y, x)"],
            "singular_points": [[0.0, 0.0]],
            "exclusion_radius": 0.1,
        },
        "domain": {"x": [-1.0, 1.0], "y": [-1.0, 1.0]},
        "initial_points": [[1.0, 0.0], [0.3, -0.7], [-0.5, 0.5]],
        "t_final": 10.0,
        "seed": 0,
    }


def circle_radius():
    return {
        "name": "circle-radius",
        "description": "the circle with the rotation group itself: projection onto the first integral",
        "coords": ["x", "y"],
        "vector_field": ["-y", "x"],
        "generators": [["-y", "x"]],
        "projection": {"components": ["x^2 + y^2"], "target_coords": ["r2"]},
        "reduced_field": ["0"],
        "section": {"constraints": ["y"], "chart": ["x"], "guards": ["x > 0"],
                    "singular_points": [[0.0, 0.0]], "exclusion_radius": 0.1},
        "domain": {"x": [-1.0, 1.0], "y": [-1.0, 1.0]},
        "t_final": 10.0,
        "seed": 0,
    }


def projective_scaling():
    A = np.array([[0.1, -1.0, 0.3], [1.0, -0.2, 0.0], [0.2, 0.4, -0.3]])
    xyz = ("x", "y", "z")
    # pi = (x/z, y/z); reduced dynamics u' = (A p)_1 - u (A p)_3, p = (u, w, 1)
    u, w = Sym("u"), Sym("w")
    p = [u, w, as_expr(1.0)]
    row = lambda i: sum((as_expr(float(A[i, j])) * p[j] for j in range(3)), as_expr(0.0))  # noqa: E731
    red = [simplify(row(0) - u * row(2)), simplify(row(1) - w * row(2))]
    vf = [to_string(simplify(sum((as_expr(float(A[i, j])) * Sym(xyz[j]) for j in range(3)), as_expr(0.0)))) for i in range(3)]
    return {
        "name": "projective-scaling",
        "description": "linear flow in R^3 projected onto the projective plane chart z != 0",
        "coords": list(xyz),
        "vector_field": vf,
        "generators": [["x", "y", "z"]],
        "projection": {"components": ["x / z", "y / z"], "target_coords": ["u", "w"], "guards": ["z > 0.05"]},
        "reduced_field": [to_string(e) for e in red],
        "matrices": {"A": A.tolist()},
        "section": {"constraints": ["x^2 + y^2 + z^2 - 1"], "chart": ["x", "y"], "guards": ["z > 0"]},
        "domain": {"x": [-1.0, 1.0], "y": [-1.0, 1.0], "z": [0.5, 1.5]},
        "initial_points": [[0.2, -0.1, 1.0], [0.5, 0.4, 0.8]],
        "t_final": 1.0,
        "seed": 0,
    }


def skew_product():
    return {
        "name": "skew-product",
        "description": "x' = x - x^3, y' = x*y - y + sin(x): x is self-contained",
        "coords": ["x", "y"],
        "vector_field": ["x - x^3", "x * y - y + sin(x)"],
        "generators": [["0", "1"]],
        "projection": {"components": ["x"], "target_coords": ["s"]},
        "reduced_field": ["s - s^3"],
        "domain": {"x": [-1.5, 1.5], "y": [-1.0, 1.0]},
        "initial_points": [[0.2, 0.0], [-1.2, 0.5]],
        "t_final": 3.0,
        "seed": 0,
    }


def jordan(component: str):
    a = -0.5
    keep_y = component == "y"
    return {
        "name": f"jordan-{'y' if keep_y else 'x'}",
        "description": f"x' = a x + y, y' = a y with a = {a}; projection onto {component}",
        "coords": ["x", "y"],
        "vector_field": [f"{a} * x + y", f"{a} * y"],
        "generators": [["1", "0"]] if keep_y else [["0", "1"]],
        "projection": {"components": [component], "target_coords": ["s"]},
        "reduced_field": [f"{a} * s"],
        "matrices": {"A": [[a, 1.0], [0.0, a]], "P": [[0.0, 1.0]] if keep_y else [[1.0, 0.0]]},
        "domain": {"x": [-2.0, 2.0], "y": [-2.0, 2.0]},
        "initial_points": [[1.0, 1.0], [-2.0, 0.5]],
        "t_final": 5.0,
        "seed": 0,
    }


def lorenz_rossler_problem():
    ms = lorenz_rossler()
    coords = list(ms.field.coords)
    W = ms.rossler_subspace
    Wq, _ = np.linalg.qr(W)
    P = complement_rows(Wq)
    gens = [[repr(float(c)) for c in Wq[:, i]] for i in range(3)]
    pts = [ms.embed(z).tolist() for z in ([0, 0, 0, 0, 0, 0], [1, 1, 20, 1, 1, 0.5], [-3, 2, 10, 2, -1, 0.3])]
    return {
        "name": "lorenz-rossler",
        "description": "Lorenz (10, 28, 8/3) and Rossler (0.2, 0.2, 5.7) mixed by a fixed linear change of variables",
        "coords": coords,
        "vector_field": ms.field.to_strings(),
        "generators": gens,
        "projection": {"components": [to_string(simplify(sum((as_expr(float(P[i, j])) * Sym(c) for j, c in enumerate(coords)), as_expr(0.0)))) for i in range(3)],
                       "target_coords": ["l1", "l2", "l3"]},
        "matrices": {"P": P.tolist()},
        "linearize_at": pts,
        "domain": {c: [-3.0, 3.0] for c in coords},
        "tolerances": {"diagram": 1e-6, "closure": 1e-8, "zero": 1e-8},
        "n_fibers": 4,
        "t_final": 5.0,
        "seed": 0,
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    problems = {
        "circle.json": circle(),
        "circle_radius.json": circle_radius(),
        "projective_scaling.json": projective_scaling(),
        "skew_product.json": skew_product(),
        "jordan.json": jordan("x"),
        "jordan_y.json": jordan("y"),
        "lorenz_rossler.json": lorenz_rossler_problem(),
    }
    for name, data in problems.items():
        (OUT / name).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {OUT / name}")


if __name__ == "__main__":
    main()
