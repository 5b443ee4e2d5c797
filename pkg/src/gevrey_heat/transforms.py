"""Closed-form traces for ``a(z) = a`` and ``a(z) = b z`` and the transforms
that turn their summability into a property of the data ``f``.

Half-integer powers only ever appear as ``(a t)**(1/2)`` times an ordinary
series, so they are stored as an (even, odd) pair and never evaluated as
fractional powers.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .heat import HeatProblem, solve, traces
from .resum import MIN_SCAN_COEFFS, direction_scan
from .series import (
    BivariateSeries,
    Mode,
    ModeError,
    TSeries,
    ZSeries,
    _zeros,
    coerce,
    factorial,
    format_coeff,
)


@dataclass(frozen=True)
class HalfIntegerSeries:
    """``even(t) + (a t)**(1/2) * odd(t)`` with ordinary divided series ``even``, ``odd``."""

    even: TSeries
    odd: TSeries
    a: object

    def equals(self, other: "HalfIntegerSeries") -> bool:
        n = min(self.even.order, other.even.order)
        m = min(self.odd.order, other.odd.order)
        return (self.a == other.a
                and self.even.truncate(n).equals(other.even.truncate(n))
                and self.odd.truncate(m).equals(other.odd.truncate(m)))


def _scalar(x, mode: Mode):
    return coerce(x, mode)


def _diagonal_sums(f: BivariateSeries, a, offset: int, K: int) -> list:
    """``sum_{j+n=k} a**n f[j, 2n+offset]`` for ``k = 0..K``."""
    out = []
    for k in range(K + 1):
        s = _zeros(1, f.mode)[0]
        an = _scalar(1, f.mode)
        for n in range(k + 1):
            s = s + an * f.coeffs[k - n, 2 * n + offset]
            an = an * a
        out.append(s)
    return out


def _check_const_truncation(f: BivariateSeries) -> int:
    J, N = f.truncation
    if N < 2 * J + 1:
        raise ValueError(f"need N >= 2J + 1 for the diagonal sums, got (J, N) = {(J, N)}")
    return J


def traces_const_a(f: BivariateSeries, a) -> tuple[TSeries, TSeries]:
    """Traces of the solution for constant ``a`` by diagonal summation."""
    K = _check_const_truncation(f)
    a = _scalar(a, f.mode)
    u0 = TSeries.from_coeffs(_diagonal_sums(f, a, 0, K), f.mode)
    u1 = TSeries.from_coeffs(_diagonal_sums(f, a, 1, K), f.mode)
    return u0, u1


def two_laplace(f: ZSeries) -> ZSeries:
    """``sum f_n zeta**n / [n/2]!`` as a divided series.

    The ordinary (raw) coefficients of the result are ``f_n / [n/2]!``;
    ``f_n`` are the divided coefficients of the input.
    """
    mode = f.mode
    raw = []
    for n, c in enumerate(f.coeffs):
        h = factorial(n // 2)
        raw.append(Fraction(c) / h if mode is Mode.EXACT else c / h)
    return ZSeries.from_raw(raw, mode)


def sqrt_substitute(g: ZSeries, a) -> HalfIntegerSeries:
    """``g((a t)**(1/2))`` split into its even and odd parts."""
    mode = g.mode
    a = _scalar(a, mode)
    raw = g.raw()
    K0, K1 = g.order // 2, (g.order - 1) // 2
    even = [raw[2 * k] * a ** k for k in range(K0 + 1)]
    odd = [raw[2 * k + 1] * a ** k for k in range(K1 + 1)] if g.order >= 1 else []
    return HalfIntegerSeries(TSeries.from_raw(even, mode),
                             TSeries.from_raw(odd or [0], mode), a)


def _sqrt(a, mode: Mode):
    if mode is Mode.FLOAT:
        return complex(cmath.sqrt(complex(a)))
    a = Fraction(a)
    if a < 0:
        raise ModeError("exact mode needs a nonnegative square for sqrt(a); use float mode")
    p, q = math.isqrt(a.numerator), math.isqrt(a.denominator)
    if p * p != a.numerator or q * q != a.denominator:
        raise ModeError(f"sqrt({a}) is irrational; use float mode")
    return Fraction(p, q)


def capF_const_a(f: BivariateSeries, a) -> TSeries:
    """The series whose value at ``t**(1/2)`` is ``u0(t) + (a t)**(1/2) u1(t)``.

    Ordinary coefficients: ``s**(2k)`` carries ``D0_k / k!`` and
    ``s**(2k+1)`` carries ``sqrt(a) D1_k / k!`` with ``D0``, ``D1`` the
    diagonal sums of the constant-``a`` traces.  ``sqrt(a)`` is the principal
    root; exact mode needs it rational.
    """
    K = _check_const_truncation(f)
    mode = f.mode
    a = _scalar(a, mode)
    root = _sqrt(a, mode)
    d0 = _diagonal_sums(f, a, 0, K)
    d1 = _diagonal_sums(f, a, 1, K)
    raw = []
    for k in range(K + 1):
        w = Fraction(1, factorial(k)) if mode is Mode.EXACT else 1.0 / factorial(k)
        raw += [d0[k] * w, root * d1[k] * w]
    return TSeries.from_raw(raw, mode)


def split_sqrt_series(F: TSeries, a) -> HalfIntegerSeries:
    """Read ``F(t**(1/2))`` as ``even(t) + (a t)**(1/2) odd(t)``."""
    mode = F.mode
    a = _scalar(a, mode)
    root = _sqrt(a, mode)
    raw = F.raw()
    even = [raw[2 * k] for k in range(F.order // 2 + 1)]
    odd = [raw[2 * k + 1] / root for k in range((F.order - 1) // 2 + 1)] if F.order else [0]
    return HalfIntegerSeries(TSeries.from_raw(even, mode), TSeries.from_raw(odd, mode), a)


def traces_bz(f: BivariateSeries, b) -> tuple[TSeries, TSeries]:
    """Traces of the solution for ``a(z) = b z``.

    ``u0 = f[*, 0]`` and ``u1[m] = sum_{j+k=m} f[j, k+1] b**k k!``.
    """
    J, N = f.truncation
    mode = f.mode
    b = _scalar(b, mode)
    M = min(J, N - 1)
    u0 = f.z_col(0)
    u1 = []
    for m in range(M + 1):
        s = _zeros(1, mode)[0]
        bk = _scalar(1, mode)
        for k in range(m + 1):
            s = s + f.coeffs[m - k, k + 1] * bk * factorial(k)
            bk = bk * b
        u1.append(s)
    return u0, TSeries.from_coeffs(u1 or [0], mode)


def g_hat(f: BivariateSeries) -> BivariateSeries:
    """Double Laplace transform of ``(L_z f - f[*, 0]) / z``.

    Its ordinary coefficient of ``t**j z**n`` is ``f[j, n+1] n!``.
    """
    J, N = f.truncation
    raw = np.array([[f.coeffs[j, n + 1] * factorial(n) for n in range(N)] for j in range(J + 1)],
                   dtype=f.coeffs.dtype)
    return BivariateSeries.from_raw(raw, f.mode)


def restrict_diagonal(g: BivariateSeries, b) -> TSeries:
    """Ordinary coefficients of ``g(t, b t)`` up to ``min(J, N)``."""
    J, N = g.truncation
    mode = g.mode
    b = _scalar(b, mode)
    raw = g.raw()
    M = min(J, N)
    out = []
    for m in range(M + 1):
        s = _zeros(1, mode)[0]
        for n in range(m + 1):
            s = s + raw[m - n, n] * b ** n
        out.append(s)
    return TSeries.from_raw(out, mode)


def g_hat_bz(f: BivariateSeries, b) -> TSeries:
    """Borel transform of ``g_hat(t, b t)``; it coincides with the trace ``u1``.

    Borel divides ordinary coefficients by ``m!``, so the divided
    coefficients of the result are the ordinary coefficients of the
    restriction.
    """
    restricted = restrict_diagonal(g_hat(f), b)
    return TSeries.from_coeffs(list(restricted.raw()), f.mode)


def laplace_z(f: ZSeries) -> TSeries:
    """``L_z f`` read as a divided series: ordinary coefficients ``f_n``."""
    return TSeries.from_raw(list(f.coeffs), f.mode)


# ---------------------------------------------------------------------------
# criteria


@dataclass(frozen=True)
class CriterionReport:
    case: str
    theta: float
    criterion_verdict: bool
    direct_verdict: bool
    criterion_directions: list
    transformed: TSeries
    details: dict

    @property
    def agree(self) -> bool:
        return self.criterion_verdict == self.direct_verdict

    def to_dict(self) -> dict:
        head = [format_coeff(c, self.transformed.mode) for c in self.transformed.coeffs[:12]]
        return {"case": self.case, "theta": self.theta,
                "criterion_verdict": self.criterion_verdict,
                "direct_verdict": self.direct_verdict,
                "criterion_directions": self.criterion_directions,
                "transformed_series_head": head, **self.details}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _t_free(f: BivariateSeries) -> bool:
    return all(c == 0 for c in f.coeffs[1:].ravel())


def _scan_all(series, directions, level: int, clearance) -> bool:
    return all(v.summable for v in direction_scan(series, directions, clearance, level=level,
                                                  workers=1))


def _direct(u0: TSeries, u1: TSeries, theta: float, clearance) -> bool:
    ok = True
    for u in (u0, u1):
        if u.is_zero() or u.order + 1 < MIN_SCAN_COEFFS:
            # too short to scan; a vanishing trace is trivially summable
            if not u.is_zero():
                raise ValueError("traces are too short for a direction scan")
            continue
        ok = ok and _scan_all(u, [theta], 1, clearance)
    return ok


def criterion_report(f: BivariateSeries, case: dict, theta: float,
                     clearance: float = math.radians(5)) -> CriterionReport:
    """Compare a transform-side summability criterion with the direct verdict.

    ``case`` is ``{"a": value}`` for constant diffusivity or ``{"b": value}``
    for ``a(z) = b z``.  The direct verdict scans the solver's traces.
    """
    mode = f.mode
    J, N = f.truncation
    if "a" in case:
        a = _scalar(case["a"], mode)
        arg = cmath.phase(complex(a))
        p = HeatProblem(ZSeries.from_coeffs([a] + [0] * N, mode), f)
        u0, u1 = traces(solve(p))
        if _t_free(f):
            name = "constant a, t-independent f"
            transformed = two_laplace(f.t_row(0))
            base = 0.5 * (theta + arg)
        else:
            name = "constant a, general f"
            transformed = capF_const_a(f if mode is Mode.FLOAT or _is_square(a) else f.to_float(),
                                       a if mode is Mode.FLOAT or _is_square(a) else complex(a))
            base = 0.5 * theta
        dirs = [base % (2 * math.pi), (base + math.pi) % (2 * math.pi)]
        crit = _scan_all(transformed, dirs, 2, clearance)
    elif "b" in case:
        b = _scalar(case["b"], mode)
        arg = cmath.phase(complex(b))
        p = HeatProblem(ZSeries.from_coeffs([0, b] + [0] * (N - 1), mode), f)
        u0, u1 = traces(solve(p))
        if _t_free(f):
            name = "linear bz, t-independent f"
            transformed = laplace_z(f.t_row(0))
            dirs = [(theta + arg) % (2 * math.pi)]
            crit = _scan_all(transformed, dirs, 1, clearance)
        else:
            name = "linear bz, general f"
            transformed = g_hat_bz(f, b)
            dirs = [theta % (2 * math.pi)]
            f0 = f.z_col(0)
            crit = _scan_all(transformed, dirs, 1, clearance)
            if not f0.is_zero():
                crit = crit and _scan_all(f0, dirs, 1, clearance)
    else:
        raise ValueError("case must give a constant 'a' or a slope 'b'")
    direct = _direct(u0, u1, theta, clearance)
    details = {"trace_orders": [u0.order, u1.order]}
    return CriterionReport(name, theta, crit, direct, dirs, transformed, details)


def _is_square(a) -> bool:
    try:
        _sqrt(a, Mode.EXACT)
        return True
    except ModeError:
        return False
