import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from projfiber.expr import (
    Add,
    Const,
    DomainError,
    Func,
    Neg,
    ParseError,
    Pow,
    Sym,
    UnboundSymbolError,
    UndeclaredSymbolError,
    ZeroKind,
    compile_exprs,
    const,
    depth,
    differentiate,
    evaluate,
    is_zero,
    parse,
    simplify,
    to_string,
)
from projfiber.sampling import Box, SamplingError

from strategies import XYZ, exprs, smooth_exprs

XY = ("x", "y")
x, y = Sym("x"), Sym("y")


# parse


def test_parse_sum_of_power_and_symbol():
    assert parse("x^2 + y", XY) == Add(Pow(x, Fraction(2)), y)


def test_parse_unary_minus():
    assert parse("-y", XY) == Neg(y)


def test_parse_log_abs():
    e = parse("x*log(abs(x))", XY)
    assert evaluate(e, {"x": math.e, "y": 0.0}) == pytest.approx(math.e)


def test_unary_minus_binds_looser_than_power():
    assert evaluate(parse("-x^2", XY), {"x": 3.0, "y": 0.0}) == -9.0
    assert evaluate(parse("(-x)^2", XY), {"x": 3.0, "y": 0.0}) == 9.0


def test_rational_exponents():
    assert parse("x^(1/2)", XY) == Pow(x, Fraction(1, 2))
    assert parse("x^(-2)", XY) == Pow(x, Fraction(-2))
    assert parse("x^-1", XY) == Pow(x, Fraction(-1))


def test_whitespace_insignificant():
    assert parse("  x*  y+ atan2( y ,x )", XY) == parse("x*y+atan2(y,x)", XY)


@pytest.mark.parametrize(
    "text, pos",
    [("x +", 3), ("(x", 2), ("x ^ y", 4), ("sin x", 4), ("x $ y", 2), ("atan2(x)", 0), ("", 0)],
)
def test_syntax_error_carries_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse(text, XY)
    assert info.value.position == pos


def test_undeclared_symbol_named():
    with pytest.raises(UndeclaredSymbolError) as info:
        parse("x + q", XY)
    assert info.value.name == "q"


def test_empty_coords_rejected():
    with pytest.raises(ValueError):
        parse("1", [])


@settings(max_examples=1200, deadline=None)
@given(exprs())
def test_round_trip(e):
    assume(depth(e) <= 8)
    assert parse(to_string(e), XYZ) == e


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(exprs())
def test_round_trip_after_simplify(e):
    s = simplify(e)
    assert parse(to_string(s), XYZ) == s


# evaluate


def test_evaluate_examples():
    assert evaluate(parse("sin(x)", XY), {"x": 0.0, "y": 0.0}) == 0.0
    assert evaluate(parse("x^2 + y^2", XY), {"x": 3.0, "y": 4.0}) == 25.0


@pytest.mark.parametrize("text, point", [("x/y", (1.0, 0.0)), ("log(x)", (-1.0, 0.0)), ("sqrt(x)", (-1.0, 1.0)), ("y^(-1)", (1.0, 0.0))])
def test_domain_errors(text, point):
    with pytest.raises(DomainError):
        evaluate(parse(text, XY), dict(zip(XY, point)))


def test_unbound_symbol():
    with pytest.raises(UnboundSymbolError):
        evaluate(parse("x + y", XY), {"x": 1.0})


def test_odd_root_of_negative():
    assert evaluate(parse("x^(1/3)", XY), {"x": -8.0, "y": 0.0}) == pytest.approx(-2.0)


@settings(max_examples=300, deadline=None)
@given(exprs(), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_compiled_matches_tree_walk(e, pt):
    point = dict(zip(XYZ, pt))
    try:
        ref = evaluate(e, point)
    except DomainError:
        ref = None
    f = compile_exprs([e], XYZ)
    if ref is None or not math.isfinite(ref):
        with pytest.raises(DomainError):
            f(np.array(pt))
    else:
        assert f(np.array(pt))[0] == pytest.approx(ref, rel=1e-12, abs=1e-12)


# differentiate


@pytest.mark.parametrize(
    "text, s, expected",
    [("x*y", "x", "y"), ("x^2 + y^2", "x", "2*x"), ("log(abs(x))", "x", "1/x"), ("atan2(y, x)", "x", "-y/(x^2+y^2)")],
)
def test_derivative_examples(text, s, expected):
    d = differentiate(parse(text, XY), s)
    verdict = is_zero(d - parse(expected, XY), Box.cube(XY, 0.5, 2.0))
    assert verdict.kind is ZeroKind.SYMBOLIC or verdict.kind is ZeroKind.NUMERIC


def _central_difference(e, point, s, h=1e-6):
    hi, lo = dict(point), dict(point)
    hi[s] += h
    lo[s] -= h
    return (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)


@settings(max_examples=200, deadline=None)
@given(smooth_exprs(max_leaves=8), st.sampled_from(XYZ), st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3))
def test_derivative_matches_finite_difference(e, s, pt):
    point = dict(zip(XYZ, pt))
    exact = evaluate(differentiate(e, s), point)
    fd = _central_difference(e, point, s)
    scale = max(abs(evaluate(e, point)), abs(exact), 1.0)
    # truncation O(h^2) plus cancellation eps/h, relative to the function's scale
    assert abs(exact - fd) <= 1e-6 * scale


@settings(max_examples=100, deadline=None)
@given(smooth_exprs(max_leaves=6), smooth_exprs(max_leaves=6), st.integers(-5, 5), st.integers(-5, 5), st.sampled_from(XYZ))
def test_derivative_linear(e1, e2, a, b, s):
    ca, cb = const(a), const(b)
    lhs = differentiate(ca * e1 + cb * e2, s)
    rhs = ca * differentiate(e1, s) + cb * differentiate(e2, s)
    assert is_zero(lhs - rhs, Box.cube(XYZ, -1.0, 1.0))


def test_derivative_of_sqrt_and_tan():
    box = Box.cube(XY, 0.2, 1.0)
    assert is_zero(differentiate(parse("sqrt(x)", XY), "x") - parse("1/(2*sqrt(x))", XY), box)
    assert is_zero(differentiate(parse("tan(x)", XY), "x") - parse("1 + tan(x)^2", XY), box)


# simplify / is_zero


def test_x_minus_x_symbolic():
    assert is_zero(parse("x - x", XY), Box.cube(XY)).kind is ZeroKind.SYMBOLIC


def test_rotation_invariant_symbolic():
    e = parse("-y*2*x + x*2*y", XY)
    assert is_zero(e, Box.cube(XY)).kind is ZeroKind.SYMBOLIC


def test_xy_nonzero_with_witness():
    v = is_zero(parse("x*y", XY), Box.cube(XY), tol=1e-9)
    assert v.kind is ZeroKind.NONZERO
    assert not v
    assert abs(v.witness[0] * v.witness[1]) >= 1e-9


def test_numeric_zero_fallback():
    v = is_zero(parse("sin(x)^2 + cos(x)^2 - 1", XY), Box.cube(XY))
    assert v.kind is ZeroKind.NUMERIC
    assert v.n_points >= 64


def test_singular_sampling_failure():
    # 1/(x - x) is singular everywhere on the box
    with pytest.raises(SamplingError):
        is_zero(parse("1/(x - x + 0*y)", XY), Box.cube(XY))


def test_simplify_collects_like_terms():
    assert simplify(parse("2*x + 3*x - x*1", XY)) == simplify(parse("4*x", XY))
    assert simplify(parse("(x + y)^2 - x^2 - 2*x*y - y^2", XY)) == Const(0.0)


def test_simplify_folds_constants():
    assert simplify(parse("sin(0) + 2^3 * 1", XY)) == Const(8.0)


def test_simplify_is_idempotent_on_examples():
    for text in ["x/y - 1/y*x", "abs(x)^2 - x^2", "exp(x)*exp(-x)", "(x+1)*(x-1)"]:
        s = simplify(parse(text, XY))
        assert simplify(s) == s


def test_function_names_exact():
    # a capitalised name is just an undeclared symbol
    with pytest.raises(UndeclaredSymbolError):
        parse("Sin(x)", XY)
    assert isinstance(parse("atan(x)", XY), Func)
