import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projfiber.flow import (
    BlowUpError,
    IntegratorConfig,
    StepLimitError,
    checkpoints,
    diagram_check,
    fiber_divergence,
    flow_map,
    group_flow,
    integrate,
)
from projfiber.report import Verdict
from projfiber.systems import angle_chart, circle, jordan, scaling_field
from projfiber.vectorfield import LieBasis, ProjectionMap, VectorField

XY = ("x", "y")


def field(*comps, coords=XY):
    return VectorField.parse(coords, comps)


def test_config_invariants():
    cfg = IntegratorConfig()
    assert (cfg.rel_tol, cfg.abs_tol) == (1e-10, 1e-12)
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")


def test_circle_quarter_turn():
    x = flow_map(circle(), [1.0, 0.0], math.pi / 2)
    assert np.allclose(x, [0.0, 1.0], atol=1e-8)


def test_zero_field_constant():
    tr = integrate(VectorField.zero(XY), [0.3, -0.2], (0.0, 5.0))
    assert np.all(tr.y == np.array([0.3, -0.2]))


def test_jordan_decay_matches_analytic():
    a = -0.5
    for t in (1.0, 10.0, 40.0):
        x = flow_map(jordan(a), [1.0, 1.0], t)
        exact = np.array([(1.0 + t) * math.exp(a * t), math.exp(a * t)])
        assert np.allclose(x, exact, rtol=1e-8, atol=1e-12)


def test_energy_preserved_over_twenty():
    tr = integrate(circle(), [0.6, -0.8], (0.0, 20.0), checkpoints=np.linspace(0, 20, 41))
    radius = np.sum(tr.y**2, axis=1)
    assert np.max(np.abs(radius - 1.0)) < 1e-8


def test_trajectory_times_increasing_and_finite():
    tr = integrate(jordan(1.0), [1.0, 1.0], (0.0, 3.0))
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.isfinite(tr.y))


def test_checkpoints_hit_exactly():
    ts = checkpoints(10.0)
    assert len(ts) == 17
    tr = integrate(circle(), [1.0, 0.0], (0.0, 10.0), checkpoints=ts)
    assert set(ts) <= set(tr.t)


def test_dense_output_between_steps():
    tr = integrate(circle(), [1.0, 0.0], (0.0, 6.0), IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10))
    t = 0.5 * (tr.t[3] + tr.t[4])
    assert np.allclose(tr(t), [math.cos(t), math.sin(t)], atol=1e-6)


def test_backward_time():
    x = flow_map(circle(), [1.0, 0.0], -math.pi / 2)
    assert np.allclose(x, [0.0, -1.0], atol=1e-8)


def test_blow_up_reports_escape_time():
    with pytest.raises(BlowUpError) as info:
        integrate(field("x^2", "0"), [1.0, 0.0], (0.0, 2.0))
    assert info.value.escape_time == pytest.approx(1.0, abs=1e-2)


def test_step_limit():
    with pytest.raises(StepLimitError):
        integrate(circle(), [1.0, 0.0], (0.0, 100.0), IntegratorConfig(max_steps=10))


def _rk4_error(h):
    cfg = IntegratorConfig(method="rk4", max_step=h)
    x = flow_map(circle(), [1.0, 0.0], 2.0, cfg)
    return np.linalg.norm(x - [math.cos(2.0), math.sin(2.0)])


def test_rk4_order():
    e1, e2 = _rk4_error(0.1), _rk4_error(0.05)
    assert abs(math.log2(e1 / e2) - 4.0) < 0.3


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.lists(st.floats(0.2, 2.0), min_size=2, max_size=2))
def test_flow_property(t, s, x0):
    v = field("x - x*y", "-y + x*y")  # Lotka-Volterra, periodic in the positive quadrant
    x0 = np.array(x0)
    lhs = flow_map(v, x0, t + s)
    rhs = flow_map(v, flow_map(v, x0, s), t)
    assert np.linalg.norm(lhs - rhs) < 1e-9 * max(1.0, np.linalg.norm(lhs))


def test_csv_export(tmp_path):
    tr = integrate(circle(), [1.0, 0.0], (0.0, 1.0))
    path = tmp_path / "traj.csv"
    tr.to_csv(path, XY)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x", "y"]
    assert len(rows) == len(tr.t) + 1
    assert float(rows[-1][0]) == tr.t_final


# group flow


def test_group_flow_scaling():
    x = group_flow(LieBasis.of(scaling_field()), [math.log(2.0)], [1.0, 1.0])
    assert np.allclose(x, [2.0, 2.0], atol=1e-9)


def test_group_flow_zero_parameters():
    assert np.array_equal(group_flow(LieBasis.of(scaling_field()), [0.0], [0.3, 0.4]), [0.3, 0.4])


def test_group_flow_rotation():
    x = group_flow(LieBasis.of(circle()), [math.pi], [1.0, 0.0])
    assert np.allclose(x, [-1.0, 0.0], atol=1e-9)


def test_group_flow_order():
    # w_2 = d/dx acts first, then the scaling w_1
    g = LieBasis.of(scaling_field(), field("1", "0"))
    x = group_flow(g, [math.log(2.0), 1.0], [0.0, 1.0])
    assert np.allclose(x, [2.0, 2.0], atol=1e-9)


# diagram check


def test_diagram_circle_angle():
    pts = [[1.0, 0.0], [0.3, -0.7], [-0.5, 0.5]]
    r = diagram_check(circle(), angle_chart(), VectorField.parse(("theta",), ["1"]), pts, 10.0)
    assert r.verdict is Verdict.PASS
    assert r.max_residual < 1e-7


def test_diagram_jordan_onto_y():
    a = -0.5
    pi = ProjectionMap.parse(XY, ["y"], target_coords=["s"])
    r = diagram_check(jordan(a), pi, VectorField.parse(("s",), [f"{a}*s"]), [[1.0, 1.0], [-2.0, 0.5]], 5.0)
    assert r.verdict is Verdict.PASS


def test_diagram_jordan_onto_x_fails():
    a = -0.5
    pi = ProjectionMap.parse(XY, ["x"], target_coords=["s"])
    r = diagram_check(jordan(a), pi, VectorField.parse(("s",), [f"{a}*s"]), [[1.0, 1.0]], 5.0)
    assert r.verdict is Verdict.FAIL
    assert r.witness == (1.0, 1.0)


# fiber divergence


def test_fiber_divergence_jordan_y():
    pi = ProjectionMap.parse(XY, ["y"])
    assert fiber_divergence(jordan(-0.5), pi, [0.0, 1.0], [5.0, 1.0], 5.0) < 1e-8


def test_fiber_divergence_jordan_x():
    pi = ProjectionMap.parse(XY, ["x"])
    assert fiber_divergence(jordan(0.0), pi, [1.0, 0.0], [1.0, 1.0], 1.0) > 0.1


def test_fiber_divergence_same_point():
    pi = ProjectionMap.parse(XY, ["x"])
    assert fiber_divergence(jordan(1.0), pi, [1.0, 2.0], [1.0, 2.0], 3.0) == 0.0


def test_fiber_divergence_requires_same_fiber():
    pi = ProjectionMap.parse(XY, ["x"])
    with pytest.raises(ValueError):
        fiber_divergence(jordan(1.0), pi, [1.0, 2.0], [1.5, 2.0], 1.0)
