"""Expression parser and forward-mode derivative checks."""

import numpy as np
import pytest

from conelab.errors import ParseError
from conelab.expressions import ScalarField, parse_expression

FIELDS_1D = ["x1/2", "2*x1", "x1*x1/2 + x1**4/10", "sin(x1)*exp(-x1*x1)", "1 - cos(2*x1)"]
FIELDS_3D = ["-2*x1", "x1*x2 - x3**2", "exp(x1/4)*sin(x2) + x3", "(x1 + x2)*(x1 - x3)/2"]


def _central_gradient(field, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (field.value(x + e) - field.value(x - e)) / (2 * h)
    return g


@pytest.mark.parametrize("expr", FIELDS_1D)
def test_gradient_matches_finite_differences_1d(expr):
    field = ScalarField(expr, 1)
    rng = np.random.default_rng(42)
    for _ in range(100):
        x = rng.normal(size=1) * 2.0
        exact = field.gradient(x)
        approx = _central_gradient(field, x)
        scale = max(1.0, np.abs(exact).max())
        assert np.max(np.abs(exact - approx)) / scale <= 1e-6


@pytest.mark.parametrize("expr", FIELDS_3D)
def test_gradient_matches_finite_differences_3d(expr):
    field = ScalarField(expr, 3)
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = rng.normal(size=3)
        exact = field.gradient(x)
        approx = _central_gradient(field, x)
        scale = max(1.0, np.abs(exact).max())
        assert np.max(np.abs(exact - approx)) / scale <= 1e-6


def test_hessian_matches_finite_differences():
    field = ScalarField("sin(x1)*x2 + x1**3/6 - exp(x2/3)", 2)
    rng = np.random.default_rng(11)
    for _ in range(25):
        x = rng.normal(size=2)
        hess = field.hessian(x)
        h = 1e-5
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            col = (field.gradient(x + e) - field.gradient(x - e)) / (2 * h)
            assert np.max(np.abs(hess[:, i] - col)) <= 1e-5


def test_batched_evaluation_matches_pointwise():
    field = ScalarField("x1*x2 + cos(x1)", 2)
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(17, 2))
    vals = field.value(pts)
    grads = field.gradient(pts)
    for k, x in enumerate(pts):
        assert vals[k] == pytest.approx(field.value(x))
        assert np.allclose(grads[k], field.gradient(x))


def test_power_requires_constant_exponent():
    with pytest.raises(ParseError):
        parse_expression("x1**x1", 1)


def test_abs_is_rejected():
    with pytest.raises(ParseError, match="non-smooth"):
        parse_expression("abs(x1)", 1)


def test_unknown_symbol_and_bad_coordinate():
    with pytest.raises(ParseError):
        parse_expression("y + 1", 2)
    with pytest.raises(ParseError):
        parse_expression("x3", 2)


def test_unbalanced_parentheses():
    with pytest.raises(ParseError):
        parse_expression("(x1 + 2", 1)


def test_zero_detection():
    assert ScalarField("0", 1).is_zero
    assert ScalarField("0*x1", 1).is_zero
    assert not ScalarField("x1 - x1", 1).is_zero  # structural, not symbolic
