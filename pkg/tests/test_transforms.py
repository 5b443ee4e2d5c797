import json
import math
from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gevrey_heat import (BivariateSeries, HeatProblem, ModeError, TSeries, ZSeries,
                         parse_series, solve, traces)
from gevrey_heat.transforms import (capF_const_a, criterion_report, g_hat, g_hat_bz, laplace_z,
                                    restrict_diagonal, split_sqrt_series, sqrt_substitute,
                                    traces_bz, traces_const_a, two_laplace)

from strategies import bivariate, nonzero_rationals, rationals

SQUARES = [Fraction(p * p, q * q) for p in range(1, 5) for q in range(1, 4)]


def same(u: TSeries, v: TSeries) -> bool:
    n = min(u.order, v.order)
    return u.truncate(n).equals(v.truncate(n))


def solver_traces(a: ZSeries, f: BivariateSeries):
    return traces(solve(HeatProblem(a, f)))


def const(a, N):
    return ZSeries.from_coeffs([a] + [0] * N, "exact")


def linear(b, N):
    return ZSeries.from_coeffs([0, b] + [0] * (N - 1), "exact")


@st.composite
def const_data(draw, max_J=4):
    J = draw(st.integers(0, max_J))
    return draw(bivariate(J, 2 * J + 1 + draw(st.integers(0, 2))))


# --- constant diffusivity -------------------------------------------------


def test_constant_data_has_trivial_traces():
    u0, u1 = traces_const_a(parse_series("1", (3, 7)), 5)
    assert list(u0.coeffs) == [1, 0, 0, 0] and u1.is_zero()


def test_classical_traces_by_diagonal_sums():
    u0, u1 = traces_const_a(parse_series("1/(1-z)", (12, 25)), 1)
    assert list(u0.coeffs) == [factorial(2 * k) for k in range(13)]
    assert list(u1.coeffs) == [factorial(2 * k + 1) for k in range(13)]


def test_diagonal_sums_need_enough_z_orders():
    with pytest.raises(ValueError):
        traces_const_a(parse_series("1", (3, 6)), 1)


@given(const_data(), nonzero_rationals())
def test_const_traces_match_solver(f, a):
    got = traces_const_a(f, a)
    ref = solver_traces(const(a, f.truncation[1]), f)
    assert same(got[0], ref[0]) and same(got[1], ref[1])


def test_two_laplace_examples():
    assert list(two_laplace(ZSeries.constant(1, 4)).raw()) == [1, 0, 0, 0, 0]
    g = two_laplace(parse_series("1/(1-z)", (0, 10)).t_row(0))
    assert list(g.raw()) == [Fraction(factorial(n), factorial(n // 2)) for n in range(11)]


@given(st.integers(0, 5), st.sampled_from(SQUARES), st.data())
def test_two_laplace_interleaving(J, a, data):
    # t-independent data: the 2-Laplace transform at (a t)^(1/2) gives both traces
    row = data.draw(bivariate(0, 2 * J + 1 + data.draw(st.integers(0, 2))))
    f = BivariateSeries.from_coeffs([list(row.coeffs[0])] + [[0] * (row.truncation[1] + 1)] * J,
                                    "exact")
    u0, u1 = solver_traces(const(a, f.truncation[1]), f)
    half = sqrt_substitute(two_laplace(f.t_row(0)), a)
    assert same(half.even, u0) and same(half.odd, u1)


def test_capF_of_t():
    # only f[1, 0] = 1: the k = 1 diagonal puts 1/1! on s^2
    f = BivariateSeries.from_raw([[0, 0, 0, 0], [1, 0, 0, 0]], "exact")
    F = capF_const_a(f, 1)
    assert list(F.raw()) == [0, 0, 1, 0]


def test_capF_t_free_matches_two_laplace():
    f = parse_series("1/(1-z)", (5, 11))
    f0 = BivariateSeries.from_coeffs([list(f.coeffs[0])] + [[0] * 12] * 5, "exact")
    F = split_sqrt_series(capF_const_a(f0, 4), 4)
    G = sqrt_substitute(two_laplace(f0.t_row(0)), 4)
    assert same(F.even, G.even) and same(F.odd, G.odd)


@given(const_data(), st.sampled_from(SQUARES + [-s for s in SQUARES[:3]]))
def test_capF_interleaving(f, a):
    if a < 0:
        with pytest.raises(ModeError):
            capF_const_a(f, a)
        return
    half = split_sqrt_series(capF_const_a(f, a), a)
    u0, u1 = traces_const_a(f, a)
    assert same(half.even, u0) and same(half.odd, u1)


def test_capF_irrational_root_needs_float():
    f = parse_series("1/(1-z)", (3, 7))
    with pytest.raises(ModeError):
        capF_const_a(f, 2)
    F = capF_const_a(f.to_float(), 2)
    half = split_sqrt_series(F, 2.0)
    u0, u1 = traces_const_a(f, 2)
    assert all(abs(x - float(y)) <= 1e-12 * abs(float(y)) for x, y in zip(half.odd.coeffs, u1.coeffs))


# --- linear diffusivity ---------------------------------------------------


def test_bz_classical_data():
    f = parse_series("1/(1-z)", (10, 11))
    u0, u1 = traces_bz(f, 1)
    assert list(u0.coeffs) == [1] + [0] * 10
    # divided coefficients (k+1)! k!, i.e. ordinary coefficients (k+1)!
    assert list(u1.raw()) == [factorial(k + 1) for k in range(11)]


def test_bz_z_free_data():
    f = parse_series("1/(1-t)", (6, 4))
    u0, u1 = traces_bz(f, Fraction(-2, 3))
    assert u0.equals(f.z_col(0)) and u1.is_zero()
    assert g_hat_bz(f, 3).is_zero()


@given(bivariate(max_J=6, max_N=8).filter(lambda f: f.truncation[1] >= 2), nonzero_rationals())
def test_bz_traces_match_solver(f, b):
    got = traces_bz(f, b)
    ref = solver_traces(linear(b, f.truncation[1]), f)
    assert same(got[0], ref[0]) and same(got[1], ref[1])


def test_g_hat_single_column():
    # f = z h(t): g_hat is h's row times 0! on z^0 only, so restriction and
    # Borel return h unchanged up to min(J, N - 1)
    h = [3, -1, Fraction(1, 2), 7]
    f = BivariateSeries.from_coeffs([[0, c, 0, 0] for c in h], "exact")
    assert list(g_hat(f).raw()[:, 0]) == h
    assert list(g_hat_bz(f, 5).coeffs) == h[:3]
    assert same(g_hat_bz(f, 5), traces_bz(f, 5)[1])


def test_restrict_diagonal():
    g = BivariateSeries.from_raw([[1, 2], [3, 0]], "exact")
    assert list(restrict_diagonal(g, 2).raw()) == [1, 3 + 2 * 2]


@given(bivariate(max_J=6, max_N=8).filter(lambda f: f.truncation[1] >= 1), rationals())
def test_g_hat_bz_equals_second_trace(f, b):
    assert same(g_hat_bz(f, b), traces_bz(f, b)[1])


def test_laplace_z_reads_divided_as_ordinary():
    f = parse_series("1/(1-z)", (0, 5)).t_row(0)
    assert list(laplace_z(f).raw()) == [factorial(n) for n in range(6)]


# --- criteria -------------------------------------------------------------


@pytest.mark.parametrize("theta, summable", [(0.0, False), (math.pi, True),
                                             (math.pi / 2, True)])
def test_criterion_constant_a(theta, summable):
    f = parse_series("1/(1-z)", (24, 64))
    rep = criterion_report(f, {"a": 1}, theta)
    assert rep.direct_verdict is summable and rep.agree
    if theta == math.pi:
        assert rep.criterion_directions == pytest.approx([math.pi / 2, 3 * math.pi / 2])


@pytest.mark.parametrize("theta, summable", [(0.0, False), (math.pi, True), (2.0, True)])
def test_criterion_linear(theta, summable):
    f = parse_series("1/(1-z)", (24, 40))
    rep = criterion_report(f, {"b": 1}, theta)
    assert rep.direct_verdict is summable and rep.agree


def test_criterion_general_data_and_report_format():
    f = parse_series("(1+t)/(1-z)", (24, 64))
    rep = criterion_report(f, {"a": 1}, math.pi)
    assert rep.case == "constant a, general f" and rep.agree
    data = json.loads(rep.to_json())
    assert {"case", "theta", "criterion_verdict", "direct_verdict",
            "transformed_series_head"} <= set(data)
    assert len(data["transformed_series_head"]) == 12
    assert all(isinstance(c, str) for c in data["transformed_series_head"])
    with pytest.raises(ValueError):
        criterion_report(f, {}, 0.0)
