import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from projfiber.cli import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, main, run
from projfiber.liesym import is_symmetry
from projfiber.problem import load_problem

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report_of(*argv):
    code, out, _ = invoke(*argv)
    return code, json.loads(out)


def write(tmp_path, data, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


CIRCLE_MIN = {"name": "c", "coords": ["x", "y"], "vector_field": ["-y", "x"], "generators": [["x", "y"]]}


@pytest.mark.parametrize(
    "command, problem, code",
    [
        ("check-symmetry", "circle", EXIT_OK),
        ("check-symmetry", "jordan", EXIT_FAIL),
        ("check-closure", "circle", EXIT_OK),
        ("check-closure", "jordan", EXIT_FAIL),
        ("check-closure", "jordan_y", EXIT_OK),
        ("check-invariance", "projective_scaling", EXIT_OK),
        ("check-fibers", "skew_product", EXIT_OK),
        ("check-fibers", "jordan", EXIT_FAIL),
        ("verify-diagram", "circle", EXIT_OK),
        ("verify-diagram", "jordan", EXIT_FAIL),
        ("verify-diagram", "jordan_y", EXIT_OK),
        ("classify", "circle_radius", EXIT_OK),
        ("reduce-linear", "circle", EXIT_OK),
        ("reduce-linear", "jordan", EXIT_FAIL),
        ("reduce-linear", "jordan_y", EXIT_OK),
        ("quotient-build", "circle", EXIT_OK),
        ("quotient-verify", "circle_radius", EXIT_OK),
        ("quotient-verify", "projective_scaling", EXIT_OK),
    ],
)
def test_command_exit_codes(command, problem, code):
    got, report = report_of(command, str(PROBLEMS / f"{problem}.json"))
    assert got == code
    assert report["summary"]["exit_code"] == code
    assert report["command"] == command


def test_check_symmetry_circle_matches_module():
    _, report = report_of("check-symmetry", str(PROBLEMS / "circle.json"))
    p = load_problem(PROBLEMS / "circle.json")
    direct = is_symmetry(p.vector_field, p.generators.fields[0], p.domain, p.tolerances["zero"], p.seed)
    check = report["checks"][0]
    assert check["verdict"] == direct.verdict.value
    assert check["max_residual"] == direct.max_residual
    assert check["method"] == "Symbolic"


def test_reduce_linear_circle_note():
    code, report = report_of("reduce-linear", str(PROBLEMS / "circle.json"))
    assert code == EXIT_OK
    assert report["results"]["reductions"] == []
    assert "no real linear reduction" in report["notes"]


def test_verify_diagram_jordan_witness():
    code, report = report_of("verify-diagram", str(PROBLEMS / "jordan.json"))
    assert code == EXIT_FAIL
    fd = next(c for c in report["checks"] if c["name"] == "fiber_divergence")
    assert fd["verdict"] == "Fail"
    assert fd["witness"] is not None
    assert fd["max_residual"] > 1e-2


def test_classify_reports_dynamics():
    _, report = report_of("classify", str(PROBLEMS / "circle_radius.json"))
    assert report["results"]["classification"] == "TrivialDynamics"
    _, report = report_of("classify", str(PROBLEMS / "circle.json"))
    assert report["results"]["classification"] == "NontrivialDynamics"


def test_inconclusive_exit(tmp_path):
    data = dict(CIRCLE_MIN, generators=[["x", "y"], ["2*x", "2*y"]])
    assert run("check-closure", write(tmp_path, data), stdout=io.StringIO(), stderr=io.StringIO()) == EXIT_INCONCLUSIVE


# problem-file errors


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"vector_field": [1, "x"]}, "$.vector_field[0]"),
        ({"coords": "x"}, "$.coords"),
        ({"seed": -1}, "$.seed"),
        ({"domain": {"x": [1, 0], "y": [0, 1]}}, "$.domain.x"),
        ({"vector_field": ["-y"]}, "$.vector_field"),
        ({"generators": [["x"]]}, "$.generators[0]"),
        ({"vector_field": ["-y", "z"]}, "$.vector_field[1]"),
        ({"vector_field": ["-y", "x +"]}, "$.vector_field[1]"),
        ({"bogus": 1}, "$"),
    ],
)
def test_problem_errors_name_the_field(tmp_path, patch, path):
    code, out, err = invoke("check-symmetry", write(tmp_path, {**CIRCLE_MIN, **patch}))
    assert code == EXIT_USAGE
    assert out == ""
    assert f"{path}:" in err


def test_missing_section(tmp_path):
    code, _, err = invoke("quotient-build", write(tmp_path, CIRCLE_MIN))
    assert code == EXIT_USAGE
    assert "$.section" in err


def test_unreadable_file(tmp_path):
    (tmp_path / "bad.json").write_text("{ not json")
    assert invoke("classify", str(tmp_path / "bad.json"))[0] == EXIT_USAGE
    assert invoke("classify", str(tmp_path / "missing.json"))[0] == EXIT_USAGE


@pytest.mark.parametrize("argv", [[], ["bogus", "x.json"], ["check-symmetry"], ["check-symmetry", "x.json", "--tol", "abc"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


@pytest.mark.parametrize("flag", [["--tol", "0"], ["--seed", "-3"], ["--samples", "0"], ["--t-final", "-1"], ["--threads", "-1"]])
def test_bad_flag_values(flag):
    assert invoke("check-symmetry", str(PROBLEMS / "circle.json"), *flag)[0] == EXIT_USAGE


# flags


def test_flags_echoed_in_provenance():
    _, report = report_of("check-fibers", str(PROBLEMS / "circle.json"), "--seed", "7", "--samples", "4", "--tol", "1e-6", "--threads", "2")
    prov = report["provenance"]
    assert prov["seed"] == 7
    assert prov["config"]["threads"] == 2
    assert prov["config"]["tolerances"]["fiber"] == 1e-6
    assert "4 base points" in report["checks"][0]["details"]


def test_t_final_flag():
    _, report = report_of("verify-diagram", str(PROBLEMS / "circle.json"), "--t-final", "2")
    assert "T=2" in report["checks"][0]["details"]


def test_report_file_matches_stdout(tmp_path):
    target = tmp_path / "report.json"
    _, out, _ = invoke("classify", str(PROBLEMS / "circle.json"), "--report", str(target))
    assert target.read_text() == out


def test_summary_on_stderr():
    _, out, err = invoke("check-symmetry", str(PROBLEMS / "circle.json"))
    assert "check-symmetry" in err and "Pass" in err
    json.loads(out)


def test_thread_count_does_not_change_results():
    _, a = report_of("check-fibers", str(PROBLEMS / "circle.json"), "--threads", "1")
    _, b = report_of("check-fibers", str(PROBLEMS / "circle.json"), "--threads", "4")
    assert a["checks"] == b["checks"]


def test_byte_identical_across_processes():
    env = dict(os.environ)
    outputs = []
    for hash_seed in ("0", "1", "12345"):
        env["PYTHONHASHSEED"] = hash_seed
        proc = subprocess.run(
            [sys.executable, "-m", "projfiber", "check-fibers", str(PROBLEMS / "skew_product.json"), "--threads", "0"],
            capture_output=True, env=env, check=False,
        )
        assert proc.returncode == EXIT_OK
        outputs.append(proc.stdout)
    assert outputs[0] == outputs[1] == outputs[2]
