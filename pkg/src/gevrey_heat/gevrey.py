"""Weighted sup-norms on discs, growth-order fits and the majorant recursion.

The weighted norm of ``f`` on ``|z| < r`` is ``sup |f(z)| (r - |z|)**p``.
It is sampled on a polar grid whose radii cluster toward the rim, where the
weighted sup of a function with a nearby singularity tends to sit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .heat import HeatProblem, StaircaseSeries, solve
from .series import Mode, ZSeries, factorial

DEFAULT_GRID = (64, 128)
SLACK = 1.05  # sampled sups undersample both sides of an inequality
SUB_ANALYTIC_SIGMA = 0.5


@dataclass(frozen=True)
class NagumoNorm:
    p: int
    r: float
    value: float


def polar_grid(r: float, grid=DEFAULT_GRID) -> np.ndarray:
    """Sample points ``rho_m exp(i phi_a)`` with ``rho_m = r sin(pi m / 2M)``.

    Doubling ``M`` or ``A`` keeps every previous point, so sampled sups can
    only grow under refinement.
    """
    M, A = grid
    if M < 4 or A < 4:
        raise ValueError("grid needs at least 4 radial and 4 angular samples")
    if not r > 0:
        raise ValueError("radius must be positive")
    rho = r * np.sin(np.pi * np.arange(M) / (2 * M))
    phi = 2 * np.pi * np.arange(A) / A
    return (rho[:, None] * np.exp(1j * phi)[None, :]).ravel()


def _raw_float(f: ZSeries) -> np.ndarray:
    # exact raw coefficients are converted after dividing by n!, so large
    # divided coefficients never pass through a float
    return np.array([complex(c) for c in f.raw()])


def _values(f, z: np.ndarray) -> np.ndarray:
    if isinstance(f, ZSeries):
        vals = np.polynomial.polynomial.polyval(z, _raw_float(f))
    else:
        vals = np.asarray(f(z), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise OverflowError("series evaluation overflowed on the sampling grid")
    return vals


def _weighted(f, p: int, r: float, z: np.ndarray) -> np.ndarray:
    return np.abs(_values(f, z)) * (r - np.abs(z)) ** p


def nagumo_norm(f: ZSeries | Callable, p: int, r: float, grid=DEFAULT_GRID) -> NagumoNorm:
    """Sampled ``sup_{|z|<r} |f(z)| (r - |z|)**p``.

    ``f`` is a series (its truncated sum is evaluated) or a vectorized callable.
    """
    if p < 0:
        raise ValueError("weight index must be nonnegative")
    z = polar_grid(r, grid)
    return NagumoNorm(p, r, float(np.max(_weighted(f, p, r, z))))


@dataclass(frozen=True)
class NormCheck:
    holds: bool
    lhs: float
    rhs: float


def _pad(f: ZSeries, order: int) -> ZSeries:
    if f.order >= order:
        return f
    extra = np.zeros(order - f.order, dtype=f.coeffs.dtype)
    if f.mode is Mode.EXACT:
        extra = np.array([Fraction(0)] * (order - f.order), dtype=object)
    return ZSeries(np.concatenate([f.coeffs, extra]), f.mode)


def check_nagumo_product(f: ZSeries, g: ZSeries, p: int, q: int, r: float,
                         grid=DEFAULT_GRID, slack: float = SLACK) -> NormCheck:
    """Check ``|fg|_{p+q,r} <= |f|_{p,r} |g|_{q,r}`` on a shared grid.

    The product is the series product of the two truncated sums, padded so
    that nothing is cut off.
    """
    order = f.order + g.order
    fg = _pad(f, order) * _pad(g, order)
    lhs = nagumo_norm(fg, p + q, r, grid).value
    rhs = nagumo_norm(f, p, r, grid).value * nagumo_norm(g, q, r, grid).value
    return NormCheck(lhs <= slack * rhs, lhs, rhs)


def check_nagumo_derivative(f: ZSeries, p: int, r: float, grid=DEFAULT_GRID,
                            slack: float = SLACK) -> NormCheck:
    """Check ``|f'|_{p+1,r} <= e (p+1) |f|_{p,r}`` with the same radius."""
    lhs = nagumo_norm(f.derivative(), p + 1, r, grid).value if f.order else 0.0
    rhs = math.e * (p + 1) * nagumo_norm(f, p, r, grid).value
    return NormCheck(lhs <= slack * rhs, lhs, rhs)


# ---------------------------------------------------------------------------
# growth-order estimation


@dataclass(frozen=True)
class GevreyEstimate:
    order_s: float
    logK: float
    logC: float
    residual: float
    rows_used: range
    sigma: float
    flag: str = ""

    def fitted(self, j) -> np.ndarray:
        """Fitted ``log m_j``."""
        j = np.asarray(j, dtype=float)
        jlogj = np.where(j > 0, j * np.log(np.maximum(j, 1)), 0.0)
        return self.logC + j * self.logK + self.sigma * jlogj


def _log(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    if isinstance(x, int):
        return math.log(x)
    return math.log(float(x))


def gevrey_order(rows: Sequence, window: range | None = None) -> GevreyEstimate:
    """Fit ``log m_j = logC + j logK + sigma j log j`` and report ``s = sigma - 1``.

    The default window is the upper half of the rows.  Exact integers and
    fractions are accepted, so factorial-sized inputs do not overflow.
    """
    rows = list(rows)
    if window is None:
        window = range(len(rows) // 2, len(rows))
    if len(window) < 4:
        raise ValueError("the fit window needs at least 4 rows")
    if window.start < 0 or window.stop > len(rows):
        raise ValueError("fit window falls outside the data")
    logs = []
    for j in window:
        m = rows[j]
        if isinstance(m, complex) or not m > 0:
            raise ValueError(f"row {j} is not positive: {m!r}")
        logs.append(_log(m))
    j = np.array(window, dtype=float)
    jlogj = np.where(j > 0, j * np.log(np.maximum(j, 1)), 0.0)
    X = np.column_stack([np.ones_like(j), j, jlogj])
    y = np.array(logs)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    if np.linalg.matrix_rank(X) < 3:
        raise ValueError("degenerate fit window")
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    logC, logK, sigma = (float(c) for c in coef)
    # j log j and j are nearly collinear on short windows; snap roundoff
    if abs(sigma) < 1e-9:
        sigma = 0.0
    flag = "sub-analytic growth" if sigma < SUB_ANALYTIC_SIGMA else ""
    return GevreyEstimate(sigma - 1, logK, logC, resid, window, sigma, flag)


# ---------------------------------------------------------------------------
# majorant recursion


@dataclass(frozen=True)
class MajorantResult:
    v: list
    g: list
    alpha: float
    lhs: list  # |u_j|_{2j,r} / Gamma(1 + 2j) for the computed solution
    holds: bool

    @property
    def failures(self) -> list:
        return [j for j, (a, b) in enumerate(zip(self.lhs, self.v)) if a > SLACK * b]


def _row(u, j: int, valid: int | None = None) -> ZSeries:
    row = u.t_row(j)
    if valid is not None:
        row = row.truncate(valid)
    return row


def majorant_sequence(p: HeatProblem, r: float, J: int | None = None,
                      grid=DEFAULT_GRID, u: StaircaseSeries | None = None) -> MajorantResult:
    """The sequence ``v_j = g_j + alpha v_{j-1}`` bounding the solution rows.

    ``g_j = |f_j|_{2j,r} / Gamma(1+2j)`` and ``alpha = e**2 |a|_{0,r}``.  The
    solution rows are measured on their trustworthy part only.
    """
    Jmax = p.truncation[0]
    J = Jmax if J is None else J
    if J > Jmax:
        raise ValueError(f"problem is truncated at t-order {Jmax}")
    if u is None:
        u = solve(p)
    alpha = math.e ** 2 * nagumo_norm(p.a, 0, r, grid).value
    g, v, lhs = [], [], []
    prev = 0.0
    for j in range(J + 1):
        scale = math.exp(-math.lgamma(1 + 2 * j))
        gj = nagumo_norm(p.f.t_row(j), 2 * j, r, grid).value * scale
        prev = gj + alpha * prev
        g.append(gj)
        v.append(prev)
        valid = u.valid[j] if isinstance(u, StaircaseSeries) else None
        if valid is not None and valid < 0:
            lhs.append(0.0)
            continue
        lhs.append(nagumo_norm(_row(u, j, valid), 2 * j, r, grid).value * scale)
    holds = all(a <= SLACK * b for a, b in zip(lhs, v))
    return MajorantResult(v, g, alpha, lhs, holds)


def growth_csv(rows: Sequence, estimate: GevreyEstimate | None = None,
               majorant: Sequence | None = None) -> str:
    """CSV with columns ``j, m_j, fitted, v_j`` (blank where unavailable)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "m_j", "fitted", "v_j"])
    for j, m in enumerate(rows):
        fit = repr(float(math.exp(estimate.fitted(j)))) if estimate is not None else ""
        vj = repr(float(majorant[j])) if majorant is not None and j < len(majorant) else ""
        w.writerow([j, repr(float(m)) if abs(_log(m)) < 700 else str(m), fit, vj])
    return buf.getvalue()


def trace_magnitudes(u, n: int = 0) -> list:
    """``|u_{j,n}|`` down column ``n``, exact where the series is exact."""
    col = u.z_col(n)
    if isinstance(u, StaircaseSeries):
        col = col.truncate(max(u.trace_order(n), 0))
    if col.mode is Mode.EXACT:
        return [abs(c) for c in col.coeffs]
    return [float(abs(c)) for c in col.coeffs]
