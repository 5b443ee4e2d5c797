from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gevrey_heat import ExpansionError, ParseError, default_radius, parse_rational, parse_series


def test_geometric_series():
    assert [int(c) for c in parse_rational("1/(1-z)", "z", 4).coeffs] == [1, 1, 2, 6, 24]


def test_monomial():
    assert [int(c) for c in parse_rational("z^2", "z", 4).coeffs] == [0, 0, 2, 0, 0]


def test_long_division_example():
    s = parse_rational("(1+z)/(1-2*z)", "z", 3)
    assert list(s.raw()) == [1, 3, 6, 12]
    assert [int(c) for c in s.coeffs] == [1, 3, 12, 72]


def _long_division(num, den, n):
    out = []
    rem = list(num) + [0] * (n + 1)
    for k in range(n + 1):
        q = Fraction(rem[k]) / den[0]
        out.append(q)
        for i, d in enumerate(den):
            if k + i < len(rem):
                rem[k + i] -= q * d
    return out


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=4),
       st.lists(st.integers(-5, 5), min_size=1, max_size=4).filter(lambda d: d[0] != 0))
def test_against_long_division(num, den):
    def poly(c):
        return "+".join(f"({x})*z^{k}" for k, x in enumerate(c))
    s = parse_rational(f"({poly(num)})/({poly(den)})", "z", 8)
    assert list(s.raw()) == _long_division(num, den, 8)


def test_power_notations_agree():
    a = parse_rational("(1-z)**-2", "z", 6)
    b = parse_rational("1/((1-z)^2)", "z", 6)
    assert a.equals(b)
    assert list(a.raw()) == [k + 1 for k in range(7)]


def test_decimal_literal_is_exact():
    assert parse_rational("0.25*z", "z", 2).raw()[1] == Fraction(1, 4)


def test_bivariate_expansion():
    u = parse_series("1/((1-t)*(1-z))", (3, 3))
    assert all(u.coeffs[j, n] == factorial(j) * factorial(n) for j in range(4) for n in range(4))
    v = parse_series("z/(1-t*z)", (3, 4))
    assert v.raw()[2, 3] == 1 and v.raw()[2, 2] == 0


@pytest.mark.parametrize("text, pos", [("1/(1-z", 6), ("1+*z", 2), ("2^z", 2), ("1/(z-z)", 1),
                                       ("1 + w", 4), ("1 $ 2", 2)])
def test_parse_errors_report_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse_rational(text, "z", 3)
    assert info.value.position == pos


def test_pole_at_origin():
    with pytest.raises(ExpansionError):
        parse_rational("1/z", "z", 3)
    # a removable factor is fine
    assert parse_rational("z/z", "z", 2).equals(parse_rational("1", "z", 2))


def test_t_rejected_in_z_series():
    with pytest.raises(ParseError):
        parse_rational("t", "z", 2)


def test_default_radius():
    assert default_radius("1/(1-z)") == pytest.approx(0.5)
    assert default_radius("1/((2-z)*(3+z))") == pytest.approx(1.0)
    assert default_radius("(1-z)/(1-z)") is None
    assert default_radius("1+z^2") is None
