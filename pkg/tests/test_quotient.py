import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projfiber.expr import parse
from projfiber.flow import group_flow
from projfiber.liesym import first_integral_check
from projfiber.quotient import (
    CanonicalizationError,
    CrossSection,
    QuotientMap,
    TrivialQuotientError,
    canonicalize,
    chart_overlap_check,
    quotient_map,
    verify_quotient_invariance,
)
from projfiber.report import Verdict
from projfiber.sampling import Box
from projfiber.systems import circle, scaling_group
from projfiber.vectorfield import CoordinateMismatch, LieBasis, VectorField

XY = ("x", "y")
SCALING = scaling_group()
ROTATION = LieBasis.of(circle())
UNIT_CIRCLE = CrossSection.parse(XY, ["x^2 + y^2 - 1"], ["atan2(y, x)"])
POSITIVE_AXIS = CrossSection.parse(XY, ["y"], ["x"], guards=["x > 0"])
UPPER = Box.from_bounds({"x": [-2.0, 2.0], "y": [0.1, 2.0]})

points = st.tuples(st.floats(-2.0, 2.0), st.floats(0.1, 2.0)).map(np.array)


def test_section_dimensions():
    with pytest.raises(CoordinateMismatch):
        CrossSection.parse(XY, ["y"], ["x", "y"])


def test_transversality():
    assert UNIT_CIRCLE.transversality(SCALING, [0.6, 0.8]) == pytest.approx(2.0)
    # rotation orbits are tangent to the unit circle
    assert UNIT_CIRCLE.transversality(ROTATION, [0.6, 0.8]) == pytest.approx(0.0)


def test_canonicalize_scaling():
    y, eps = canonicalize(SCALING, UNIT_CIRCLE, [3.0, 4.0])
    assert np.allclose(y, [0.6, 0.8], atol=1e-10)
    assert eps == pytest.approx([-math.log(5.0)], abs=1e-8)


def test_canonicalize_already_on_section():
    y, eps = canonicalize(SCALING, UNIT_CIRCLE, [0.6, 0.8])
    assert np.allclose(y, [0.6, 0.8], atol=1e-12)
    assert eps == pytest.approx([0.0], abs=1e-12)


def test_canonicalize_rotation_to_positive_axis():
    y, _ = canonicalize(ROTATION, POSITIVE_AXIS, [0.0, 2.0])
    assert np.allclose(y, [2.0, 0.0], atol=1e-9)


def test_canonicalize_failure_reports_residual():
    # the scaling orbit of (1, 0) never meets y = 1
    sec = CrossSection.parse(XY, ["y - 1"], ["x"])
    with pytest.raises(CanonicalizationError) as info:
        canonicalize(SCALING, sec, [1.0, 0.0])
    assert info.value.residual > 0.5


def test_quotient_rotation_is_radius():
    q = quotient_map(ROTATION, POSITIVE_AXIS, [0.3, -0.4])
    assert q == pytest.approx([0.5], abs=1e-9)
    assert first_integral_check(parse("x^2 + y^2", XY), circle(), Box.cube(XY)).passed


def test_trivial_quotient():
    g = LieBasis.of(VectorField.parse(XY, ["1", "0"]), VectorField.parse(XY, ["0", "1"]))
    sec = CrossSection.parse(XY, ["x", "y"], [])
    with pytest.raises(TrivialQuotientError, match="trivial quotient"):
        quotient_map(g, sec, [1.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(points)
def test_idempotent(x):
    y, _ = canonicalize(SCALING, UNIT_CIRCLE, x)
    z, _ = canonicalize(SCALING, UNIT_CIRCLE, y)
    assert np.linalg.norm(z - y) < 1e-9


@settings(max_examples=40, deadline=None)
@given(points, st.floats(-1.0, 1.0))
def test_orbit_constant(x, eps):
    q = QuotientMap(SCALING, UNIT_CIRCLE)
    assert np.linalg.norm(q(group_flow(SCALING, [eps], x)) - q(x)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(points, points, st.booleans(), st.floats(0.2, 5.0))
def test_partition_matches_closed_form(x, y, same_orbit, lam):
    if same_orbit:
        y = lam * x
    closed_equal = abs(x[0] / x[1] - y[0] / y[1]) < 1e-8
    q = QuotientMap(SCALING, UNIT_CIRCLE)
    quotient_equal = np.linalg.norm(q(x) - q(y)) < 1e-8
    assert closed_equal == quotient_equal


def test_quotient_monotone_in_closed_form():
    # atan2 on the upper half circle is a decreasing function of x/y
    q = QuotientMap(SCALING, UNIT_CIRCLE)
    pts = UPPER.sample(30, seed=4)
    ratio = pts[:, 0] / pts[:, 1]
    vals = np.array([q(p)[0] for p in pts])
    order = np.argsort(ratio)
    assert np.all(np.diff(vals[order]) < 0)


def test_verify_scaling_passes():
    r = verify_quotient_invariance(SCALING, UNIT_CIRCLE, Box.cube(XY, -1.0, 1.0), singular_points=[[0.0, 0.0]], exclusion_radius=0.1)
    assert r.verdict is Verdict.PASS


def test_verify_wrong_chart_fails():
    # a constraint that vanishes identically makes the whole plane the "section"
    wrong = CrossSection.parse(XY, ["0"], ["x"])
    r = verify_quotient_invariance(SCALING, wrong, UPPER)
    assert r.verdict is Verdict.FAIL
    assert r.witness is not None


def test_verify_rotation_first_integral():
    r = verify_quotient_invariance(ROTATION, POSITIVE_AXIS, Box.cube(XY), singular_points=[[0.0, 0.0]], exclusion_radius=0.1)
    assert r.verdict is Verdict.PASS


def test_chart_overlap_two_sections():
    # the y = x ray and the unit circle, related through r = sqrt(2) * ... on the upper half plane
    diag = CrossSection.parse(XY, ["x^2 + y^2 - 1"], ["y / sqrt(x^2 + y^2)"])
    r = chart_overlap_check(SCALING, UNIT_CIRCLE, diag, UPPER, transition=lambda q: np.sin(q))
    assert r.verdict is Verdict.PASS
