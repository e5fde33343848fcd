import math

import numpy as np
import pytest
from scipy import integrate

from funcreg.errors import DependentInput
from funcreg.fnspace import (
    Constant,
    Cosine,
    FunctionExpr,
    Indicator,
    Polynomial,
    Sine,
    composite_rule,
    default_rule,
    eval_number,
    evaluate,
    format_expr,
    gram,
    gram_schmidt,
    inner_product,
    norm,
    parity_parts,
    parse_expr,
)

ONE = FunctionExpr.atom(Constant())
COS1 = FunctionExpr.atom(Cosine(1))
SIN1 = FunctionExpr.atom(Sine(1))


def quad_oracle(f, g):
    """Adaptive scipy quadrature, independent of the package rules."""
    pts = sorted(set(f.breakpoints) | set(g.breakpoints))
    val, _ = integrate.quad(lambda t: float(f(t) * g(t)), -1, 1, points=pts or None, limit=400,
                            epsabs=1e-13, epsrel=1e-13)
    return val


def test_eval_examples():
    assert evaluate(ONE, 0.3) == 1.0
    assert abs(evaluate(COS1, 0.5)) < 1e-15
    p2 = FunctionExpr.atom(Polynomial((-1.0, 0.0, 3.0)), math.sqrt(5 / 8))
    assert evaluate(p2, 1.0) == pytest.approx(math.sqrt(5 / 8) * 2, abs=1e-12)


def test_eval_rejects_outside_domain():
    with pytest.raises(ValueError):
        evaluate(ONE, 1.5)


def test_inner_product_examples():
    assert inner_product(COS1, COS1) == pytest.approx(1.0, abs=1e-14)
    assert abs(inner_product(COS1, SIN1)) < 1e-14
    half = FunctionExpr.atom(Constant(), 1 / math.sqrt(2))
    ind = FunctionExpr.atom(Indicator(-0.5, 0.5))
    assert inner_product(half, ind) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_norm_examples():
    assert norm(FunctionExpr.zero()) == 0.0
    assert norm(FunctionExpr.atom(Cosine(3))) == pytest.approx(1.0, abs=1e-14)
    assert norm(FunctionExpr.atom(Indicator(-0.5, 0.5))) == pytest.approx(1.0, abs=1e-12)


def test_exact_trig_gram_matches_quadrature():
    fs = [ONE, COS1, SIN1, FunctionExpr.atom(Cosine(7)), FunctionExpr.atom(Sine(4))]
    exact = gram(fs)
    quad = gram(fs, rule=default_rule())
    assert np.max(np.abs(exact - quad)) < 1e-12
    assert exact[0, 0] == 2.0


@pytest.mark.parametrize("text_f, text_g", [
    ("poly(1/3, 2, 1)", "ind(-0.5, 0.5)"),
    ("cos(3) + 0.5*sin(2)", "poly(0, 0, 0, 1)"),
    ("ind(-0.2, 0.7)", "cos(5)"),
])
def test_inner_product_against_scipy(text_f, text_g):
    f, g = parse_expr(text_f), parse_expr(text_g)
    assert inner_product(f, g) == pytest.approx(quad_oracle(f, g), abs=1e-10)


def test_rule_integrates_polynomials_exactly():
    rule = composite_rule(4, 6)
    for deg in range(12):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert rule.weights @ rule.nodes ** deg == pytest.approx(exact, abs=1e-13)


def test_gram_schmidt_examples():
    out = gram_schmidt([ONE])
    assert out[0](np.array([0.0]))[0] == pytest.approx(1 / math.sqrt(2))
    t = FunctionExpr.atom(Polynomial((0.0, 1.0)))
    q0, q1 = gram_schmidt([ONE, t])
    grid = np.linspace(-1, 1, 7)
    assert np.allclose(q1(grid), math.sqrt(1.5) * grid, atol=1e-12)
    assert np.allclose(q0(grid), 1 / math.sqrt(2), atol=1e-12)
    with pytest.raises(DependentInput):
        gram_schmidt([COS1, COS1])


def test_parse_and_format_round_trip():
    f = parse_expr("0.5*const() + 2*cos(3) - sin(1) + poly(1, 0, -2) + 3*ind(-0.25, 0.5)")
    g = parse_expr(format_expr(f))
    grid = np.linspace(-1, 1, 41)
    assert np.array_equal(f(grid), g(grid))


@pytest.mark.parametrize("bad", ["cos(1.5)", "foo(1)", "2 cos(1)", "ind(1)"])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        parse_expr(bad)


def test_eval_number():
    assert eval_number("pi/3") == pytest.approx(math.pi / 3)
    assert eval_number("1/d**2", {"d": 4}) == 1 / 16
    assert eval_number("sqrt(2)") == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        eval_number("__import__('os')")


def test_parity_parts_exact():
    f = parse_expr("poly(1/3, 2, 1) + ind(-0.2, 0.6) + sin(2) + cos(1)")
    even, odd = parity_parts(f)
    grid = np.linspace(-1, 1, 101)
    assert np.allclose(even(grid), even(-grid), atol=1e-15)
    assert np.allclose(odd(grid), -odd(-grid), atol=1e-15)
    off = (grid != 0.6) & (grid != -0.6) & (grid != 0.2) & (grid != -0.2)
    assert np.allclose((even + odd)(grid)[off], f(grid)[off], atol=1e-14)
    assert abs(inner_product(even, odd)) < 1e-12
