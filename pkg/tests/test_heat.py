from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gevrey_heat import (BivariateSeries, DiffusivityClass, HeatProblem, SolverError, ZSeries,
                         apply_D, counterexample_oracle, fixed_point_terms, parse_series,
                         reconstruct, solve, solve_neumann, traces)
from gevrey_heat.heat import fixed_point_rhs, round_trip_residual, validity_profile

from strategies import bivariate, problems


def const_a(value, N, mode="exact"):
    return ZSeries.from_coeffs([value] + [0] * N, mode)


def classical(J, N):
    return HeatProblem(const_a(1, N), parse_series("1/(1-z)", (J, N)))


def counterexample(J, N):
    return HeatProblem(ZSeries.from_raw([0, 0, 1] + [0] * (N - 2), "exact"),
                       parse_series("1/(1-z)", (J, N)))


@given(bivariate(max_J=4, max_N=6).filter(lambda u: u.truncation[1] >= 2))
def test_zero_diffusivity_is_identity(u):
    p = HeatProblem(const_a(0, u.truncation[1]), u)
    assert apply_D(p, u).equals(u.truncate(u.truncation[0], u.truncation[1] - 2))


def test_one_step_for_t_independent_input():
    f = parse_series("1/(1-z)", (1, 8))
    u = BivariateSeries.from_coeffs([list(f.coeffs[0]), [0] * 9], "exact")
    d = apply_D(classical(1, 8), u)
    assert list(d.coeffs[0]) == list(f.coeffs[0][:7])
    assert list(d.coeffs[1]) == [-c for c in f.coeffs[0][2:]]


def test_classical_solution_table():
    J, N = 8, 20
    u = solve(classical(J, N))
    assert u.valid == tuple(N - 2 * j for j in range(J + 1))
    for j in range(J + 1):
        for n in range(N + 1):
            expected = factorial(2 * j + n) if n <= N - 2 * j else 0
            assert u.coeffs[j, n] == expected
    u0, _ = traces(u)
    assert [int(c) for c in u0.coeffs] == [factorial(2 * j) for j in range(J + 1)]


def test_counterexample_table():
    u = solve(counterexample(10, 12))
    assert u.agrees_with(counterexample_oracle(10, 12))
    assert u.coeffs[2, 3] == 216
    assert all(u.coeffs[j, 0] == 0 and u.coeffs[j, 1] == 0 for j in range(1, 11))
    u0, u1 = traces(u)
    assert list(u0.coeffs) == [1] + [0] * 10 and list(u1.coeffs) == [1] + [0] * 10


def test_zero_source():
    p = HeatProblem(const_a(3, 6), BivariateSeries.zeros(4, 6))
    u = solve(p)
    assert u.is_zero()
    assert traces(u)[0].is_zero() and traces(u)[1].is_zero()
    assert round_trip_residual(p, u) == 0


@given(problems())
def test_round_trip(p):
    u = solve(p)
    d = apply_D(p, u)
    J, N = d.truncation
    m = u.mask()[:, :N + 1]
    assert np.all((d.coeffs == p.f.coeffs[:, :N + 1]) | ~m)


@given(problems(valuation=1))
def test_round_trip_simple_zero(p):
    assert round_trip_residual(p, solve(p)) == 0


@given(problems(), st.integers(1, 12))
def test_neumann_partial_sums_converge_in_finitely_many_steps(p, terms):
    J = p.truncation[0]
    full = solve(p)
    partial = solve_neumann(p, terms)
    if terms >= J + 1:
        assert partial.equals(full)
    else:
        # rows below the number of terms are already final
        assert np.all(partial.coeffs[:terms] == full.coeffs[:terms])


def test_neumann_single_term_is_source():
    p = classical(4, 10)
    assert np.all(solve_neumann(p, 1).coeffs[0] == p.f.coeffs[0])
    assert solve_neumann(classical(5, 12), 6).equals(solve(classical(5, 12)))


def test_neumann_zero_diffusivity():
    f = parse_series("1/((1-z)*(1-t))", (3, 6))
    p = HeatProblem(const_a(0, 6), f)
    for terms in (1, 2, 5):
        assert solve_neumann(p, terms).as_plain().equals(f)


def test_validity_profiles():
    assert validity_profile(const_a(1, 10), 4, 10) == (10, 8, 6, 4, 2)
    assert validity_profile(ZSeries.from_coeffs([0, 1, 0, 0], "exact"), 3, 3) == (3, 2, 1, 0)
    assert validity_profile(ZSeries.from_coeffs([0, 0, 2, 0], "exact"), 2, 3) == (3, 3, 3)


def test_diffusivity_classes():
    assert DiffusivityClass.of(const_a(2, 3)) is DiffusivityClass.UNIT
    assert DiffusivityClass.of(ZSeries.from_coeffs([0, 1, 0], "exact")) is \
        DiffusivityClass.SIMPLE_ZERO
    assert DiffusivityClass.of(ZSeries.from_coeffs([0, 0, 2], "exact")) is \
        DiffusivityClass.HIGHER_ZERO


def test_short_diffusivity_rejected():
    with pytest.raises(SolverError):
        HeatProblem(const_a(1, 3), parse_series("1", (2, 6)))


def test_float_mode_matches_exact():
    exact = solve(classical(6, 14))
    approx = solve(HeatProblem(const_a(1, 14, "float"), parse_series("1/(1-z)", (6, 14)).to_float()))
    m = exact.mask()
    ref = np.array([[float(c) for c in row] for row in exact.coeffs])
    assert np.allclose(approx.coeffs.real[m], ref[m], rtol=1e-13)


def _fixed_point_case(p, count):
    u = solve(p)
    u0, u1 = traces(u)
    g = fixed_point_rhs(p, u0, u1)
    return u, u0, u1, fixed_point_terms(p, g, count)


@pytest.mark.parametrize("a_expr, gain", [("1", 2), ("2/(1+z)", 2), ("z", 1), ("z*(3-z)", 1)])
def test_fixed_point_vanishing_orders(a_expr, gain):
    J, N = 14, 16
    a = parse_series(a_expr, (0, N)).t_row(0)
    p = HeatProblem(a, parse_series("1/((1-z)*(1-t))", (J, N)))
    _, _, _, terms = _fixed_point_case(p, 7)
    for k, term in enumerate(terms):
        assert term.z_order >= gain * k


@pytest.mark.parametrize("a_expr", ["1", "1+z", "z", "z/(1-z)"])
def test_reconstruction_matches_solution(a_expr):
    J, N = 10, 12
    a = parse_series(a_expr, (0, N)).t_row(0)
    p = HeatProblem(a, parse_series("(1+t*z)/(1-z)", (J, N)))
    u, u0, u1, terms = _fixed_point_case(p, 4)
    rec = reconstruct(p, u0, u1, terms)
    assert rec.truncation[0] >= 1
    assert u.agrees_with(rec)


def test_reconstruction_needs_a_spare_t_order():
    p = classical(10, 12)
    _, u0, u1, terms = _fixed_point_case(p, 6)
    with pytest.raises(SolverError):
        reconstruct(p, u0, u1, terms)


def test_fixed_point_rejects_higher_zero():
    p = counterexample(3, 6)
    with pytest.raises(SolverError):
        fixed_point_terms(p, p.f, 2)


def test_traces_need_a_z_column():
    with pytest.raises(SolverError):
        traces(BivariateSeries.zeros(2, 0))
