import math
from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gevrey_heat import (BivariateSeries, HeatProblem, ZSeries, check_nagumo_derivative,
                         check_nagumo_product, gevrey_order, majorant_sequence, nagumo_norm,
                         parse_rational, parse_series, solve)
from gevrey_heat.gevrey import SLACK, growth_csv, polar_grid, trace_magnitudes

from strategies import zseries

GRID = (32, 64)


def poly(coeffs):
    return ZSeries.from_raw(coeffs, "float")


def test_constant_norm():
    assert nagumo_norm(ZSeries.constant(1, 3), 0, 0.7).value == pytest.approx(1.0)


def test_identity_norm_approaches_radius():
    v = nagumo_norm(poly([0, 1]), 0, 1.0).value
    assert 0.999 < v <= 1.0


def test_geometric_weighted_norm():
    # |1 - z| >= 1 - |z| with equality on the positive axis
    v = nagumo_norm(lambda z: 1 / (1 - z), 1, 1.0).value
    assert 0.99 < v <= 1.0 + 1e-12
    # divided coefficients n! stay finite in float up to n = 170; the tail 0.8**160 is negligible
    truncated = nagumo_norm(parse_rational("1/(1-z)", "z", 160).to_float(), 1, 0.8).value
    assert truncated == pytest.approx(nagumo_norm(lambda z: 1 / (1 - z), 1, 0.8).value, rel=1e-9)


def test_grid_refinement_is_monotone():
    f = poly([0.3, -1, 2, 0.5, -0.25])
    coarse = nagumo_norm(f, 2, 0.8, (16, 32)).value
    fine = nagumo_norm(f, 2, 0.8, (32, 64)).value
    assert fine >= coarse


def test_grid_validation():
    with pytest.raises(ValueError):
        polar_grid(1.0, (2, 8))
    with pytest.raises(ValueError):
        polar_grid(0.0)
    with pytest.raises(ValueError):
        nagumo_norm(poly([1]), -1, 1.0)


small = st.floats(-3, 3, allow_nan=False)


def float_polys(max_degree=5):
    return st.lists(small, min_size=1, max_size=max_degree + 1).map(poly)


@given(float_polys(), small, st.integers(0, 3), st.floats(0.2, 2.0))
def test_homogeneity(f, lam, p, r):
    a = nagumo_norm(f.scale(lam), p, r, GRID).value
    assert a == pytest.approx(abs(lam) * nagumo_norm(f, p, r, GRID).value, rel=1e-12, abs=1e-300)


@given(float_polys(), float_polys(), st.integers(0, 3), st.floats(0.2, 2.0))
def test_triangle_inequality(f, g, p, r):
    n = max(f.order, g.order)
    pad = lambda s: poly(list(s.raw()) + [0] * (n - s.order))
    lhs = nagumo_norm(pad(f) + pad(g), p, r, GRID).value
    assert lhs <= nagumo_norm(f, p, r, GRID).value + nagumo_norm(g, p, r, GRID).value + 1e-12


@given(float_polys(), st.integers(0, 3), st.floats(0.2, 2.0))
def test_pointwise_bound(f, p, r):
    z = polar_grid(r, GRID)
    value = nagumo_norm(f, p, r, GRID).value
    inside = np.abs(z) < r
    assert np.all(np.abs(f.evaluate(z[inside])) * (r - np.abs(z[inside])) ** p
                  <= value * (1 + 1e-12))


def test_product_examples():
    one = ZSeries.constant(1, 0, "float")
    c = check_nagumo_product(one, one, 0, 0, 1.0)
    assert c.holds and c.lhs == pytest.approx(c.rhs)
    f = parse_rational("1/(1-z)", "z", 30).to_float()
    g = parse_rational("1-z", "z", 1).to_float()
    assert check_nagumo_product(f, g, 1, 0, 1.0).holds


@given(st.lists(small, min_size=6, max_size=6), st.lists(small, min_size=6, max_size=6),
       st.floats(0.3, 2.0))
def test_product_random_quintics(a, b, r):
    assert check_nagumo_product(poly(a), poly(b), 1, 1, r, GRID).holds


def test_derivative_examples():
    assert check_nagumo_derivative(ZSeries.constant(1, 0, "float"), 3, 1.0).holds
    for k in range(1, 6):
        for p in range(4):
            assert check_nagumo_derivative(poly([0] * k + [1]), p, 1.0).holds
    f = parse_rational("1/(1-z)", "z", 40).to_float()
    assert check_nagumo_derivative(f, 2, 1.0).holds


@given(float_polys(7), st.integers(0, 4), st.floats(0.3, 2.0))
def test_derivative_random(f, p, r):
    assert check_nagumo_derivative(f, p, r, GRID).holds


def test_gevrey_order_examples():
    est = gevrey_order([factorial(2 * j) for j in range(30)])
    assert 0.9 <= est.order_s <= 1.1
    est = gevrey_order([factorial(j) for j in range(30)])
    assert -0.1 <= est.order_s <= 0.1
    est = gevrey_order([1] * 20)
    assert est.order_s == -1 and est.flag == "sub-analytic growth"


def test_gevrey_order_frozen_fit():
    # fit of log (2j)! over rows 12..24, computed once with an independent
    # lstsq on the same regressors and frozen here
    j = np.arange(12, 25, dtype=float)
    X = np.column_stack([np.ones_like(j), j, j * np.log(j)])
    y = np.array([math.lgamma(2 * k + 1) for k in range(12, 25)])
    ref = np.linalg.lstsq(X, y, rcond=None)[0]
    est = gevrey_order([factorial(2 * k) for k in range(25)])
    assert est.sigma == pytest.approx(ref[2], rel=1e-10)
    assert est.sigma == pytest.approx(1.9713174105, rel=1e-9)


def test_gevrey_order_accepts_huge_exact_values():
    rows = [Fraction(factorial(3 * j), 7 ** j) for j in range(200)]
    assert 1.9 < gevrey_order(rows).order_s < 2.1


def test_gevrey_order_rejects_bad_input():
    with pytest.raises(ValueError):
        gevrey_order([1, 2, 0, 4, 5, 6, 7, 8], range(0, 8))
    with pytest.raises(ValueError):
        gevrey_order([1, 2, 3], range(0, 3))
    with pytest.raises(ValueError):
        gevrey_order([1] * 10, range(5, 12))


def test_majorant_zero_source():
    p = HeatProblem(ZSeries.constant(1, 8), BivariateSeries.zeros(4, 8))
    res = majorant_sequence(p, 0.5, 4)
    assert res.v == [0.0] * 5 and res.g == [0.0] * 5 and res.lhs == [0.0] * 5 and res.holds


def test_majorant_zero_diffusivity():
    f = parse_series("1/((1-z)*(2-t))", (5, 10))
    p = HeatProblem(ZSeries.constant(0, 10), f)
    res = majorant_sequence(p, 0.5, 5)
    assert res.alpha == 0
    assert res.v == res.g
    assert res.lhs == pytest.approx(res.g, rel=1e-12)


def test_majorant_classical():
    p = HeatProblem(ZSeries.constant(1, 40), parse_series("1/(1-z)", (12, 40)))
    res = majorant_sequence(p, 0.5, 12)
    assert res.holds and res.failures == []
    assert res.alpha == pytest.approx(math.e ** 2)


@given(st.integers(0, 10_000))
def test_majorant_random_exact_problems(seed):
    from strategies import random_problem
    p = random_problem(np.random.default_rng(seed), 5, 14)
    assert majorant_sequence(p, 0.4, 5, GRID).holds


def test_growth_csv_and_trace_magnitudes():
    u = solve(HeatProblem(ZSeries.constant(1, 20), parse_series("1/(1-z)", (10, 20))))
    rows = trace_magnitudes(u, 0)
    assert rows == [factorial(2 * j) for j in range(11)]
    est = gevrey_order(rows)
    text = growth_csv(rows, est)
    lines = text.strip().splitlines()
    assert lines[0] == "j,m_j,fitted,v_j" and len(lines) == 12
