"""The operator ``D = 1 - a(z) dt^-1 dz^2`` on truncated series.

``solve`` inverts ``D`` row by row through ``u_j = f_j + a * u_{j-1}''``.
Differentiating twice in ``z`` per t-order eats z-coefficients, so the
solution carries a per-row validity profile (:class:`StaircaseSeries`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .parsing import parse_rational, parse_series
from .series import (
    BivariateSeries,
    Mode,
    TSeries,
    ZSeries,
    _check_same,
    _zeros,
    as_mode,
    factorial,
    factorials,
    format_coeff,
    parse_coeff,
)


class DiffusivityClass(enum.Enum):
    UNIT = "unit"                # a(0) != 0
    SIMPLE_ZERO = "simple_zero"  # a(0) = 0, a'(0) != 0
    HIGHER_ZERO = "higher_zero"  # a(z) = O(z^2)

    @classmethod
    def of(cls, a: ZSeries) -> "DiffusivityClass":
        if a.coeffs[0] != 0:
            return cls.UNIT
        if a.order >= 1 and a.coeffs[1] != 0:
            return cls.SIMPLE_ZERO
        return cls.HIGHER_ZERO


class SolverError(ValueError):
    """A solver precondition failed."""


@dataclass(frozen=True)
class HeatProblem:
    """Data of ``(1 - a(z) dt^-1 dz^2) u = f``."""

    a: ZSeries
    f: BivariateSeries
    klass: DiffusivityClass = field(init=False)

    def __post_init__(self):
        _check_same(self.a, self.f)
        if self.a.order < self.f.truncation[1]:
            raise SolverError(
                f"a is known to order {self.a.order} but f needs {self.f.truncation[1]}")
        object.__setattr__(self, "klass", DiffusivityClass.of(self.a))

    @property
    def mode(self) -> Mode:
        return self.f.mode

    @property
    def truncation(self) -> tuple[int, int]:
        return self.f.truncation

    @classmethod
    def from_expressions(cls, a, f: str, truncation, mode: Mode | str = Mode.EXACT):
        """Build from expression text; ``a`` may also be a list of divided coefficients."""
        J, N = truncation
        mode = as_mode(mode)
        if isinstance(a, str):
            a_series = parse_rational(a, "z", N)
        else:
            if len(a) < N + 1:
                raise SolverError(f"a needs at least {N + 1} coefficients, got {len(a)}")
            a_series = ZSeries.from_coeffs([Fraction(c) for c in a], Mode.EXACT)
        f_series = parse_series(f, (J, N))
        if mode is Mode.FLOAT:
            a_series, f_series = a_series.to_float(), f_series.to_float()
        return cls(a_series, f_series)

    def to_dict(self) -> dict:
        return {"a": [format_coeff(c, self.mode) for c in self.a.coeffs],
                "f": self.f.to_dict(), "truncation": list(self.truncation),
                "mode": self.mode.value}

    @classmethod
    def from_dict(cls, data: dict) -> "HeatProblem":
        """Load ``{a, f, truncation, mode}``; ``a`` and ``f`` may be text or data."""
        mode = as_mode(data.get("mode", "exact"))
        J, N = data["truncation"]
        a, f = data["a"], data["f"]
        if isinstance(f, dict):
            f_series = BivariateSeries.from_dict(f).truncate(J, N)
            if isinstance(a, str):
                a_series = parse_rational(a, "z", N)
                if mode is Mode.FLOAT:
                    a_series = a_series.to_float()
            else:
                a_series = ZSeries.from_coeffs([parse_coeff(str(c), mode) for c in a], mode)
            return cls(a_series, f_series)
        if not isinstance(a, str):
            a = [Fraction(str(c)) for c in a]
        return cls.from_expressions(a, f, (J, N), mode)


@dataclass(frozen=True, eq=False)
class StaircaseSeries(BivariateSeries):
    """A bivariate series whose row ``j`` is trustworthy only up to ``valid[j]``.

    ``valid[j] == -1`` marks a row with no trustworthy entry.  Entries beyond
    the staircase are stored as zero.
    """

    valid: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        if len(self.valid) != self.coeffs.shape[0]:
            raise ValueError("validity profile length must equal the row count")

    def mask(self) -> np.ndarray:
        J, N = self.truncation
        n = np.arange(N + 1)
        return np.array([n <= v for v in self.valid])

    def as_plain(self) -> BivariateSeries:
        return BivariateSeries(self.coeffs, self.mode)

    def agrees_with(self, other: BivariateSeries) -> bool:
        """Equality on the common block, restricted to the staircase."""
        J = min(self.truncation[0], other.truncation[0])
        N = min(self.truncation[1], other.truncation[1])
        m = self.mask()[:J + 1, :N + 1]
        diff = self.coeffs[:J + 1, :N + 1] != other.coeffs[:J + 1, :N + 1]
        return not bool(np.any(diff & m))

    def trace_order(self, n: int) -> int:
        """Largest ``J'`` such that rows ``0..J'`` all know column ``n``."""
        J = -1
        for v in self.valid:
            if v < n:
                break
            J += 1
        return J


def validity_profile(a: ZSeries, J: int, N: int) -> tuple:
    """Per-row trustworthy z-order of the solution of ``D u = f``.

    Coefficient ``n`` of ``a * g''`` reads ``g`` up to index ``n + 2 - v``
    with ``v`` the valuation of ``a``; entries with ``n < v`` are exactly 0.
    """
    v = a.valuation()
    valid = [N]
    for _ in range(J):
        valid.append(min(N, max(valid[-1] + v - 2, v - 1)))
    return tuple(max(x, -1) for x in valid)


def _a_times_dz2_rows(raw_a: np.ndarray, rows: np.ndarray, mode: Mode) -> np.ndarray:
    """Divided coefficients of ``a * row''`` for each row, zero-padded."""
    N = rows.shape[1] - 1
    g = _zeros(rows.shape, mode)
    g[:, :N - 1] = rows[:, 2:]
    fac = factorials(N, mode)
    inv = 1 / fac if mode is Mode.FLOAT else np.array([Fraction(1, x) for x in fac], dtype=object)
    g_raw = g * inv
    out = _zeros(rows.shape, mode)
    for k, ak in enumerate(raw_a[:N + 1]):
        if ak == 0:
            continue
        out[:, k:] = out[:, k:] + ak * g_raw[:, :N + 1 - k]
    return out * fac


def _check_finite(arr: np.ndarray, mode: Mode):
    if mode is Mode.FLOAT and not np.all(np.isfinite(arr)):
        raise OverflowError("float-mode coefficients overflowed; lower the truncation "
                            "or use exact mode")


def solve(p: HeatProblem) -> StaircaseSeries:
    """The unique formal solution of ``D u = f`` with its validity staircase."""
    J, N = p.truncation
    mode = p.mode
    raw_a = p.a.raw()
    valid = validity_profile(p.a, J, N)
    n = np.arange(N + 1)
    out = _zeros((J + 1, N + 1), mode)
    out[0] = p.f.coeffs[0]
    for j in range(1, J + 1):
        row = p.f.coeffs[j] + _a_times_dz2_rows(raw_a, out[j - 1:j], mode)[0]
        row[n > valid[j]] = _zeros(1, mode)[0]
        out[j] = row
    _check_finite(out, mode)
    return StaircaseSeries(out, mode, valid)


def apply_D(p: HeatProblem, u: BivariateSeries) -> BivariateSeries:
    """``u - a(z) dt^-1 dz^2 u`` on truncation ``(J, N - 2)``."""
    _check_same(p.a, u)
    if u.truncation[1] < 2:
        raise SolverError("apply_D needs z-order at least 2")
    return u - u.dz2().dt_inv().mul_z(p.a)


def round_trip_residual(p: HeatProblem, u: StaircaseSeries):
    """Largest ``|D u - f|`` over the staircase; exactly 0 for exact solutions."""
    r = apply_D(p, u) - p.f
    J, N = r.truncation
    m = u.mask()[:J + 1, :N + 1]
    vals = [abs(x) for x in r.coeffs[m]]
    return max(vals, default=0)


def solve_neumann(p: HeatProblem, terms: int) -> StaircaseSeries:
    """Partial sum ``sum_{k < terms} (a dt^-1 dz^2)^k f``."""
    if terms < 1:
        raise ValueError("terms must be at least 1")
    J, N = p.truncation
    mode = p.mode
    raw_a = p.a.raw()
    valid = validity_profile(p.a, J, N)
    mask = np.array([np.arange(N + 1) <= v for v in valid])
    term = np.array(p.f.coeffs)
    total = np.array(p.f.coeffs)
    for _ in range(1, min(terms, J + 1)):
        nxt = _zeros(term.shape, mode)
        nxt[1:] = _a_times_dz2_rows(raw_a, term[:-1], mode)
        nxt[~mask] = _zeros(1, mode)[0]
        term = nxt
        total = total + term
    total[~mask] = _zeros(1, mode)[0]
    _check_finite(total, mode)
    return StaircaseSeries(total, mode, valid)


def traces(u: BivariateSeries) -> tuple[TSeries, TSeries]:
    """The traces ``u_{*,0}`` and ``u_{*,1}``, cut to their trustworthy length."""
    if u.truncation[1] < 1:
        raise SolverError("traces need z-order at least 1")
    out = []
    for n in (0, 1):
        col = u.z_col(n)
        if isinstance(u, StaircaseSeries):
            J = u.trace_order(n)
            if J < 0:
                raise SolverError(f"no trustworthy coefficient of trace {n}")
            col = col.truncate(J)
        out.append(col)
    return out[0], out[1]


def counterexample_oracle(J: int, N: int) -> BivariateSeries:
    """``u[j, n] = n! (n (n - 1))**j``, the solution for ``a = z**2``, ``f = 1/(1-z)``."""
    return BivariateSeries.from_coeffs(
        [[factorial(n) * (n * (n - 1)) ** j for n in range(N + 1)] for j in range(J + 1)],
        Mode.EXACT)


# ---------------------------------------------------------------------------
# fixed-point decomposition of the summability proof


@dataclass(frozen=True)
class FixedPointTerm:
    series: BivariateSeries
    z_order: int  # first nonzero z-column; N + 1 when the block vanishes


def _reduced_diffusivity(p: HeatProblem) -> ZSeries:
    """``1/a`` (unit class) or ``1/A`` with ``a = z A`` (simple-zero class)."""
    if p.klass is DiffusivityClass.UNIT:
        return p.a.inverse()
    if p.klass is DiffusivityClass.SIMPLE_ZERO:
        return p.a.div_var().inverse()
    raise SolverError("a(z) = O(z^2): the fixed-point construction has no z-gain "
                      "and no summability criterion is available")


def fixed_point_terms(p: HeatProblem, g: BivariateSeries, count: int) -> list[FixedPointTerm]:
    """Terms ``w_0 = g``, ``w_p = K w_{p-1}`` with ``K = (1/a) dt dz^-2``.

    In the simple-zero class ``K = (1/(z A)) dt dz^-2``.  Each step costs one
    t-order, so ``count`` is capped by the t-truncation of ``g``.
    """
    inv = _reduced_diffusivity(p)
    _check_same(inv, g)
    if count < 1:
        raise ValueError("count must be at least 1")
    if count - 1 > g.truncation[0]:
        raise SolverError(f"g has t-order {g.truncation[0]}; cannot build {count} terms")
    simple = p.klass is DiffusivityClass.SIMPLE_ZERO
    w = g
    out = [FixedPointTerm(w, w.z_valuation())]
    for _ in range(1, count):
        step = w.dz_inv2().dt()
        if simple:
            step = step.div_z()
        w = step.mul_z(inv)
        out.append(FixedPointTerm(w, w.z_valuation()))
    return out


def fixed_point_rhs(p: HeatProblem, u0: TSeries, u1: TSeries) -> BivariateSeries:
    """The right-hand side ``g`` built from the problem and its two traces.

    Unit class: ``g = (u0 + z u1 - f) / a``.
    Simple-zero class: ``g = (u1 + (u0 - f)/z) / A``.
    """
    inv = _reduced_diffusivity(p)
    N = p.f.truncation[1]
    U0 = BivariateSeries.from_t(u0, N)
    U1 = BivariateSeries.from_t(u1, N - 1).dz_inv()  # z * u1
    if p.klass is DiffusivityClass.UNIT:
        return (U0 + U1 - p.f).mul_z(inv)
    rest = (BivariateSeries.from_t(u0, N) - p.f).div_z()
    return (BivariateSeries.from_t(u1, N - 1) + rest).mul_z(inv)


def reconstruct(p: HeatProblem, u0: TSeries, u1: TSeries,
                terms: list[FixedPointTerm]) -> BivariateSeries:
    """``u0 + z u1 + dz^-2 dt w`` with ``w`` the sum of the given terms.

    Exact on the returned truncation, whose z-order is capped by where the
    first omitted term can contribute.
    """
    w = terms[0].series
    for t in terms[1:]:
        w = w + t.series
    # the omitted tail w_count, ... starts at z^(gain * count), hence the cap
    gain = 2 if p.klass is DiffusivityClass.UNIT else 1
    N = min(p.f.truncation[1], gain * len(terms) + 1)
    head = BivariateSeries.from_t(u0, N) + BivariateSeries.from_t(u1, N - 1).dz_inv()
    J = min(w.truncation[0] - 1, head.truncation[0])
    if J < 0:
        raise SolverError("the terms use up every t-order; reconstruct from fewer terms")
    return head.truncate(J, N) + w.dt().dz_inv2().truncate(J, N)
