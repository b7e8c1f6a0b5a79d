import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontspeed.expr import (
    Binary, Const, DomainError, ExprSyntaxError, Unary, Var, derivative_at, differentiate,
    evaluate, kink_points, parse,
)


@pytest.mark.parametrize("text,u,expected", [
    ("u*(1-u)", 0.5, 0.25),
    ("2*u*(1-u)*(max(0.5,u)-0.5)", 0.25, 0.0),
    ("0.05*u^2", 1.0, 0.05),
    ("log(u+0.05)", 0.5, math.log(0.55)),
    ("u", 0.3, 0.3),
    ("1.5*sin(2*pi*u - pi)*(1+2*u)", 0.75, 3.75),
])
def test_evaluate_examples(text, u, expected):
    assert evaluate(parse(text), u) == pytest.approx(expected, abs=1e-12)


def test_log_example_value():
    assert evaluate(parse("log(u+0.05)"), 0.5) == pytest.approx(-0.59784, abs=1e-5)


@pytest.mark.parametrize("text,u,expected", [
    ("-u^2", 2.0, -4.0),          # ^ binds tighter than unary minus
    ("2^-1", 0.0, 0.5),
    ("2^3^2", 0.0, 512.0),        # right associative
    ("1-2-3", 0.0, -4.0),
    ("8/2/2", 0.0, 2.0),
    ("2*3+4", 0.0, 10.0),
    ("u**2", 3.0, 9.0),
    ("min(u, 1-u)", 0.2, 0.2),
    ("abs(u-1)", 0.25, 0.75),
    ("exp(0)+cos(0)+sqrt(4)", 0.0, 4.0),
])
def test_precedence(text, u, expected):
    assert evaluate(parse(text), u) == pytest.approx(expected)


@pytest.mark.parametrize("text,position", [("u*(1-u", 6), ("u+", 2), ("2*x", 2), ("u $ 2", 2), ("max(u)", 5)])
def test_syntax_errors_report_position(text, position):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.position == position


def test_unknown_identifier():
    with pytest.raises(ExprSyntaxError, match="unknown identifier"):
        parse("foo(u)")


@pytest.mark.parametrize("text,u", [("log(u)", 0.0), ("sqrt(u-1)", 0.5), ("1/u", 0.0), ("(u-1)^0.5", 0.0)])
def test_domain_errors(text, u):
    with pytest.raises(DomainError):
        evaluate(parse(text), u)


def test_vectorized_evaluation():
    grid = np.linspace(0, 1, 11)
    assert np.allclose(evaluate(parse("u*(1-u)"), grid), grid * (1 - grid))
    assert np.allclose(evaluate(parse("3"), grid), 3.0)


@pytest.mark.parametrize("text,u,expected", [
    ("u*(1-u)", 0.0, 1.0),
    ("0.05*u^2", 1.0, 0.1),
    ("2*u*(1-u)*(u-0.4)", 0.4, 0.48),
    ("exp(u/2)", 0.0, 0.5),
    ("u^u", 1.0, 1.0),
    ("log(u+0.05)", 0.0, 20.0),
])
def test_derivative_examples(text, u, expected):
    value, kink = derivative_at(parse(text), u)
    assert value == pytest.approx(expected, rel=1e-12)
    assert not kink


@pytest.mark.parametrize("text", ["2*u*(1-u)*(max(0.5,u)-0.5)", "2*u*(1-u)*(max(u,0.5)-0.5)"])
def test_kink_takes_right_branch(text):
    value, kink = derivative_at(parse(text), 0.5)
    assert kink
    assert value == pytest.approx(0.5)     # derivative of 2u(1-u)(u-0.5) at 0.5


def test_abs_kink_right_branch():
    value, kink = derivative_at(parse("abs(u-0.3)"), 0.3)
    assert kink and value == 1.0
    value, kink = derivative_at(parse("min(u, 0.3)"), 0.3)
    assert kink and value == 0.0


def test_kink_points():
    assert kink_points(parse("2*u*(1-u)*(max(0.5,u)-0.5)")) == [0.5]
    assert kink_points(parse("abs(u-0.3)+min(u,0.7)")) == [0.3, 0.7]
    assert kink_points(parse("u*(1-u)")) == []


@pytest.mark.parametrize("coeffs", [[1.0], [0.0, 2.0], [1.0, -3.0, 2.5], [0.5, 0.0, -1.0, 4.0, -2.0, 1.5]])
def test_polynomial_second_derivative(coeffs):
    text = "+".join(f"({c})*u^{k}" for k, c in enumerate(coeffs))
    e = parse(text)
    d2 = differentiate(differentiate(e))
    grid = np.linspace(0, 1, 101)
    poly = np.polynomial.Polynomial(coeffs).deriv(2)
    assert np.allclose(evaluate(d2, grid), poly(grid), atol=1e-12, rtol=0)


# -- random expressions -------------------------------------------------------

_leaf = st.one_of(st.just(Var()), st.floats(-3, 3, allow_nan=False).map(lambda v: Const(round(v, 3))))


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "max", "min"]), children, children)
        .map(lambda t: Binary(t[0], t[1], t[2])),
        st.tuples(st.sampled_from(["neg", "sin", "cos", "exp"]), children).map(lambda t: Unary(t[0], t[1])),
        children.map(lambda c: Binary("^", c, Const(2.0))),
    )


expressions = st.recursive(_leaf, _extend, max_leaves=8)


@settings(max_examples=150, deadline=None)
@given(expressions)
def test_round_trip(e):
    grid = np.linspace(0, 1, 101)
    try:
        expected = evaluate(e, grid)
    except DomainError:
        return
    again = parse(str(e))
    assert np.allclose(evaluate(again, grid), expected, atol=1e-15, rtol=1e-15)


@settings(max_examples=150, deadline=None)
@given(expressions)
def test_derivative_matches_central_difference(e):
    grid = np.linspace(0.01, 0.99, 50)
    kinks = kink_points(e)
    grid = np.array([u for u in grid if all(abs(u - k) > 1e-4 for k in kinks)])
    if grid.size == 0:
        return
    try:
        vals = evaluate(e, grid)
        if np.max(np.abs(vals)) > 1e6:
            return
        d = evaluate(differentiate(e), grid)
        fd = (evaluate(e, grid + 1e-6) - evaluate(e, grid - 1e-6)) / 2e-6
    except DomainError:
        return
    scale = np.maximum(1.0, np.abs(d)) * max(1.0, np.max(np.abs(vals)))
    assert np.all(np.abs(d - fd) <= 1e-6 * scale)
