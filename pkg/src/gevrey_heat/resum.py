"""Borel transform, Padé continuation and Laplace sums along rays.

Directional summability is decided numerically.  Singular points of the
Borel transform are located with Padé approximants of its logarithmic
derivative: near ``(1 - tau/p)**g`` that derivative has a simple pole at
``p`` with residue ``g``, so branch points and poles both show up as poles,
and zeros of the transform (positive integer ``g``) can be discarded.  A
singular point counts only when it reappears at the next lower Padé order.
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .series import BivariateSeries, Mode, ModeError, TSeries, factorial

MIN_SCAN_COEFFS = 16
DEFAULT_CLEARANCE = math.radians(5)
RESIDUE_TOL = 1e-10
ZERO_TOL = 0.05  # residues this close to a positive integer mark zeros
STABILITY_TOL = 1e-3
SVD_TOL = 1e-14
COLUMN_TOL = 1e-3  # the trace statistic is a log-scale fit
COLUMN_MAX_ORDER = 16


class PadeError(ValueError):
    """The Padé linear system is rank deficient at the requested order."""


class LaplaceError(ValueError):
    """The requested ray is not admissible for the Laplace integral."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge."""


class InsufficientCoefficients(ValueError):
    pass


# ---------------------------------------------------------------------------
# Borel transform


@dataclass(frozen=True)
class BorelSeries:
    """Raw Taylor coefficients of the Borel transform in ``tau``.

    ``level`` 1 divides raw coefficients by ``j!``; level 2 divides them by
    ``Gamma(1 + j/2)``, the transform adapted to growth ``Gamma(1 + j/2)``.
    """

    coeffs: np.ndarray
    mode: Mode
    level: int = 1
    origin: object = field(default=None, repr=False, compare=False)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def to_float(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs], dtype=complex)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def recover(self) -> TSeries:
        """Undo a level-1 transform: divided coefficients ``phi_j (j!)**2``."""
        if self.level != 1:
            raise ValueError("only level-1 transforms can be undone exactly")
        out = [c * factorial(j) ** 2 for j, c in enumerate(self.coeffs)]
        return TSeries.from_coeffs(out, self.mode)

    def evaluate(self, tau):
        return np.polynomial.polynomial.polyval(np.asarray(tau, dtype=complex), self.to_float())


def borel(u: TSeries, level: int = 1) -> BorelSeries:
    """Borel transform of a divided t-series.

    Level 1: ``phi_j = u_j / (j!)**2``, exact in exact mode.  Level 2:
    ``phi_j = (u_j / j!) / Gamma(1 + j/2)``, always returned in float mode.
    """
    if level == 1:
        if u.mode is Mode.EXACT:
            phi = np.array([Fraction(c) / factorial(j) ** 2 for j, c in enumerate(u.coeffs)],
                           dtype=object)
        else:
            phi = np.array([c * math.exp(-2 * math.lgamma(j + 1))
                            for j, c in enumerate(u.coeffs)], dtype=complex)
        return BorelSeries(phi, u.mode, 1, u)
    if level == 2:
        raw = u.raw()
        phi = np.array([complex(c) * math.exp(-math.lgamma(1 + j / 2))
                        for j, c in enumerate(raw)], dtype=complex)
        return BorelSeries(phi, Mode.FLOAT, 2, u)
    raise ValueError("level must be 1 or 2")


# ---------------------------------------------------------------------------
# Padé approximants


def root_radius(c: np.ndarray) -> float:
    """Rough convergence radius from the upper half of the coefficients."""
    n = len(c)
    est = []
    for j in range(max(1, n // 2), n):
        if abs(c[j]) > 0:
            est.append(abs(c[j]) ** (-1.0 / j))
    if not est:
        return 1.0
    rho = float(np.median(est))
    return rho if np.isfinite(rho) and rho > 0 else 1.0


@dataclass(frozen=True)
class Pade:
    """``num(tau) / den(tau)`` with ascending coefficient arrays, ``den[0] = 1``."""

    num: np.ndarray
    den: np.ndarray
    L: int
    M: int

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=complex)
        P = np.polynomial.polynomial
        return P.polyval(tau, self.num) / P.polyval(tau, self.den)

    def poles(self) -> np.ndarray:
        if len(self.den) <= 1:
            return np.array([], dtype=complex)
        return np.polynomial.polynomial.polyroots(self.den).astype(complex)

    def residues(self) -> np.ndarray:
        P = np.polynomial.polynomial
        p = self.poles()
        return P.polyval(p, self.num) / P.polyval(p, P.polyder(self.den))


def _scaled(phi) -> tuple[np.ndarray, float]:
    c = phi.to_float() if isinstance(phi, BorelSeries) else np.asarray(phi, dtype=complex)
    if not np.all(np.isfinite(c)):
        raise OverflowError("Borel coefficients are not finite")
    rho = root_radius(c)
    with np.errstate(over="ignore", invalid="ignore"):
        out = c * rho ** np.arange(len(c))
    if not np.all(np.isfinite(out)):
        raise OverflowError("rescaled Borel coefficients are not finite")
    return out, rho


def _unscale(num, den, rho) -> tuple[np.ndarray, np.ndarray]:
    return (num * rho ** -np.arange(len(num), dtype=float),
            den * rho ** -np.arange(len(den), dtype=float))


def _toeplitz(c: np.ndarray, L: int, M: int) -> np.ndarray:
    Z = np.zeros((L + M + 1, M + 1), dtype=complex)
    for k in range(M + 1):
        Z[k:, k] = c[:L + M + 1 - k]
    return Z


def _pade_scaled(c: np.ndarray, L: int, M: int, tol: float, strict: bool):
    """Padé of scaled data; robust mode reduces the degrees as needed."""
    if L < 0 or M < 0:
        raise ValueError("Padé degrees must be nonnegative")
    if L + M + 1 > len(c):
        raise InsufficientCoefficients(
            f"[{L}/{M}] needs {L + M + 1} coefficients, have {len(c)}")
    c = c[:L + M + 1]
    scale = np.linalg.norm(c)
    if scale == 0 or np.max(np.abs(c[:L + 1])) <= tol * np.max(np.abs(c)):
        if strict and scale != 0:
            raise PadeError("numerator block vanishes; lower the degrees")
        return np.zeros(1, dtype=complex), np.ones(1, dtype=complex), 0, 0
    while True:
        if M == 0:
            return c[:L + 1].copy(), np.ones(1, dtype=complex), L, 0
        Z = _toeplitz(c, L, M)
        C = Z[L + 1:L + M + 1, :]
        s = np.linalg.svd(C, compute_uv=False)
        rank = int(np.sum(s > tol * scale))
        if rank == M:
            break
        if strict:
            raise PadeError(f"[{L}/{M}] system has rank {rank} < {M}")
        L, M = L - (M - rank), rank
        if L < 0:
            L, M = 0, M + L
            if M < 0:
                M = 0
    _, _, Vh = np.linalg.svd(C)
    b = Vh.conj()[-1]
    # reweighted null vector, as in the rational-interpolation literature
    D = np.diag(np.abs(b) + np.sqrt(np.finfo(float).eps))
    Q, _ = np.linalg.qr((C @ D).conj().T, mode="complete")
    b = D @ Q[:, M]
    b = b / np.linalg.norm(b)
    a = Z[:L + 1, :] @ b
    if not strict:
        lead = np.argmax(np.abs(b) > tol)
        b, a = b[lead:], a[lead:]
        nz = np.nonzero(np.abs(a) > tol * scale)[0]
        a = a[:nz[-1] + 1] if len(nz) else np.zeros(1, dtype=complex)
        nz = np.nonzero(np.abs(b) > tol)[0]
        b = b[:nz[-1] + 1]
    if abs(b[0]) == 0:
        raise PadeError("denominator vanishes at the origin")
    return a / b[0], b / b[0], len(a) - 1, len(b) - 1


def pade(phi, L: int, M: int) -> Pade:
    """Strict ``[L/M]`` approximant; raises :class:`PadeError` if degenerate."""
    c, rho = _scaled(phi)
    a, b, L, M = _pade_scaled(c, L, M, SVD_TOL, strict=True)
    a, b = _unscale(a, b, rho)
    return Pade(a, b, L, M)


def robust_pade(phi, L: int, M: int, tol: float = SVD_TOL) -> Pade:
    """``[L/M]`` approximant with automatic degree reduction.

    Singular values below ``tol`` drop the degrees, which removes the
    spurious pole-zero pairs a rank-deficient system would produce.
    """
    c, rho = _scaled(phi)
    a, b, L, M = _pade_scaled(c, L, M, tol, strict=False)
    a, b = _unscale(a, b, rho)
    return Pade(a, b, L, M)


def default_order(n_coeffs: int) -> int:
    return max((n_coeffs - 2) // 2, 0)


# ---------------------------------------------------------------------------
# singular points through the logarithmic derivative


@dataclass(frozen=True)
class Singularity:
    location: complex
    exponent: complex  # residue of the log-derivative
    stability: float   # relative shift between the two Padé orders

    @property
    def kind(self) -> str:
        g = self.exponent
        if abs(g.imag) < 1e-3 and abs(g.real - round(g.real)) < 1e-3 and round(g.real) < 0:
            return "pole"
        return "branch"


def _log_derivative(c: np.ndarray) -> np.ndarray:
    """Coefficients of ``psi'/psi`` after removing leading zeros of ``c``."""
    nz = np.nonzero(c)[0]
    psi = c[nz[0]:]
    n = len(psi) - 1
    dpsi = psi[1:] * np.arange(1, n + 1)
    d = np.zeros(n, dtype=complex)
    for k in range(n):
        d[k] = (dpsi[k] - np.dot(psi[1:k + 1], d[k - 1::-1][:k])) / psi[0]
    return d


def _pole_residues(a: np.ndarray, b: np.ndarray, rho: float,
                   res_scale: float) -> list[tuple[complex, complex]]:
    P = np.polynomial.polynomial
    out = []
    for p in P.polyroots(b):
        res = res_scale * P.polyval(p, a) / P.polyval(p, P.polyder(b))
        if abs(res) < RESIDUE_TOL:
            continue  # pole-zero doublet
        if abs(res.imag) < ZERO_TOL and abs(res.real - round(res.real)) < ZERO_TOL and round(res.real) >= 1:
            continue  # zero of the transform, not a singular point
        out.append((complex(p) * rho, complex(res)))
    return out


def _dlog_candidates(d: np.ndarray, m: int, rho: float,
                     res_scale: float = 1.0) -> list[tuple[complex, complex]]:
    a, b, L, M = _pade_scaled(d, m, m, SVD_TOL, strict=False)
    if M == 0:
        return []
    return _pole_residues(a, b, rho, res_scale)


def _dlog_unreduced(d: np.ndarray, m: int, rho: float,
                    res_scale: float = 1.0) -> list[tuple[complex, complex]]:
    Z = _toeplitz(d, m, m)
    C = Z[m + 1:2 * m + 1, :]
    b = np.concatenate([[1.0], np.linalg.lstsq(C[:, 1:], -C[:, 0], rcond=None)[0]])
    return _pole_residues(Z[:m + 1, :] @ b, b, rho, res_scale)


def singularities(phi, order: int | None = None, tol: float = STABILITY_TOL) -> list[Singularity]:
    """Singular points of the Borel transform that persist across two orders."""
    c, rho = _scaled(phi)
    if not np.any(c):
        return []
    # zeros of the transform closer than its singularities make the
    # log-derivative coefficients explode; shrink the variable until they fit
    for _ in range(50):
        with np.errstate(over="ignore", invalid="ignore"):
            d = _log_derivative(c)
        mags = np.abs(d)
        ok = np.isfinite(mags) & (mags < 1e250)
        if np.all(ok):
            break
        good = np.nonzero(ok & (mags > 0))[0]
        rate = max((mags[k] ** (1.0 / (k + 1)) for k in good), default=2.0)
        s_fac = 1.0 / (2.0 * max(rate, 1.0))
        c = c * s_fac ** np.arange(len(c))
        rho *= s_fac
    else:
        raise OverflowError("log-derivative coefficients overflow")
    r_d = root_radius(d) if np.any(d) else 1.0
    d = d * r_d ** np.arange(len(d))
    if len(d) < 3:
        raise InsufficientCoefficients("too few coefficients for singularity detection")
    m = default_order(len(d) + 1) if order is None else order
    m = min(m, (len(d) - 1) // 2)
    if m < 1:
        raise InsufficientCoefficients("too few coefficients for singularity detection")
    # substituting sigma = r_d s rescales residues by 1/r_d; undo that
    top = _dlog_candidates(d, m, rho * r_d, r_d)
    # rank reduction maps nearby orders onto one approximant, so the lower
    # orders are fitted without it; a point must persist in both
    lows = [_dlog_unreduced(d, k, rho * r_d, r_d) for k in (m - 1, m - 2) if k >= 1]
    out = []
    for p, g in top:
        if not lows or not all(lows):
            break
        shift = max(min(abs(p - q) for q, _ in low) for low in lows) / max(abs(p), 1e-300)
        if shift <= tol:
            out.append(Singularity(p, g, shift))
    out.sort(key=lambda s: (abs(s.location), cmath.phase(s.location)))
    return out


def _angle_gap(a: float, b: float) -> float:
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


def blocking(sing: list[Singularity], theta: float, clearance: float) -> list[Singularity]:
    """Singular points lying within ``clearance`` of the ray ``arg tau = theta``."""
    return [s for s in sing
            if abs(s.location) < 1e-12 or _angle_gap(cmath.phase(s.location), theta) <= clearance]


# ---------------------------------------------------------------------------
# Laplace integral


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=None)
def _paired_rule():
    # both rules in one node array, so each panel costs one integrand call
    x20, w20 = _gauss(20)
    x40, w40 = _gauss(40)
    return np.concatenate([x20, x40]), w20, w40


def _panel_pair(F, a: float, b: float) -> tuple[complex, complex]:
    x, w20, w40 = _paired_rule()
    half = 0.5 * (b - a)
    vals = F(half * x + 0.5 * (b + a))
    return half * complex(np.dot(w20, vals[:20])), half * complex(np.dot(w40, vals[20:]))


def _adaptive(F, a: float, b: float, scale: float, rtol: float = 1e-14,
              budget: int = 200) -> complex:
    """Compare 20- and 40-point rules, bisecting where they disagree."""
    total, stack, used = 0j, [(a, b)], 0
    while stack:
        lo_end, hi_end = stack.pop()
        lo, hi = _panel_pair(F, lo_end, hi_end)
        used += 1
        if abs(hi - lo) <= rtol * max(abs(hi), abs(total), scale):
            total += hi
            continue
        if used >= budget:
            raise QuadratureError("panel subdivision did not converge")
        mid = 0.5 * (lo_end + hi_end)
        stack += [(mid, hi_end), (lo_end, mid)]
    return total


def _ray_integral(approx: Pade, theta: float, t: complex, rtol: float = 1e-14,
                  max_panels: int = 400) -> complex:
    e = cmath.exp(1j * theta)
    kappa = (e / t).real
    if kappa <= 1e-12 * abs(e / t):
        raise LaplaceError("arg t must lie within pi/2 of the ray direction")
    for p in approx.poles():
        q = p / e
        if q.real > 0 and abs(q.imag) <= 1e-8 * abs(p) and kappa * q.real < 50:
            raise LaplaceError(f"approximant has a pole on the ray at {p:.6g}")

    def F(s):
        tau = s * e
        return approx(tau) * np.exp(-tau / t) * e / t

    total, a, width = 0j, 0.0, 0.25 / kappa
    quiet = 0
    for _ in range(max_panels):
        b = a + width
        piece = _adaptive(F, a, b, abs(total), rtol)
        if not np.isfinite(piece):
            raise QuadratureError("integrand overflowed along the ray")
        total += piece
        if abs(piece) <= 1e-16 * abs(total) and kappa * b > 5:
            quiet += 1
            if quiet >= 2:
                return total
        elif total == 0 and kappa * b > 60:
            return total
        else:
            quiet = 0
        a, width = b, width * 1.5
    raise QuadratureError("Laplace integral did not settle within the panel budget")


def laplace_sum(phi: BorelSeries, theta: float, t: complex, pade_orders=None,
                clearance: float = DEFAULT_CLEARANCE, check: bool = True) -> complex:
    """``(1/t) int_0^{inf e^{i theta}} phi(tau) exp(-tau/t) dtau`` with Padé continuation.

    Raises :class:`LaplaceError` when a stable singular point lies within
    ``clearance`` of the ray or when ``t`` is outside the ray's half plane.
    """
    if phi.level != 1:
        raise ValueError("Laplace sums are implemented for level-1 transforms")
    t = complex(t)
    if t == 0:
        raise LaplaceError("t must be nonzero")
    if phi.is_zero():
        return 0j
    n = phi.order + 1
    if pade_orders is None:
        m = default_order(n)
        pade_orders = (m, m)
    if check and n >= 4:
        hit = blocking(singularities(phi), theta, clearance)
        if hit:
            raise LaplaceError(f"singular point {hit[0].location:.6g} is within the "
                               f"clearance of the ray arg tau = {theta:.6g}")
    approx = robust_pade(phi, *pade_orders)
    return _ray_integral(approx, theta, t)


# ---------------------------------------------------------------------------
# directional verdicts


@dataclass(frozen=True)
class SummabilityVerdict:
    theta: float
    summable: bool
    evidence: list
    angular_clearance: float
    sum_samples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "theta_degrees": round(math.degrees(self.theta), 12),
            "summable": self.summable,
            "poles": [{"re": s.location.real, "im": s.location.imag,
                       "exponent_re": s.exponent.real, "exponent_im": s.exponent.imag,
                       "stability": s.stability} for s in self.evidence],
            "samples": [{"t_re": complex(t).real, "t_im": complex(t).imag,
                         "f_re": complex(v).real, "f_im": complex(v).imag}
                        for t, v in self.sum_samples],
        }


def thread_count() -> int:
    env = os.environ.get("GEVREY_HEAT_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _as_float_series(u: TSeries) -> BorelSeries:
    return borel(u, 1)


def direction_scan(u, directions, clearance: float = DEFAULT_CLEARANCE,
                   order: int | None = None, sample_t=(), level: int = 1,
                   workers: int | None = None) -> list[SummabilityVerdict]:
    """One verdict per direction from the stable singular points of the Borel transform.

    ``u`` is a divided :class:`TSeries` or an already transformed
    :class:`BorelSeries`.  ``sample_t`` moduli add Laplace sums at
    ``|t| e^{i theta}`` to summable verdicts (level 1 only).
    """
    phi = u if isinstance(u, BorelSeries) else borel(u, level)
    if phi.order + 1 < MIN_SCAN_COEFFS:
        raise InsufficientCoefficients(
            f"direction scan needs at least {MIN_SCAN_COEFFS} coefficients, got {phi.order + 1}")
    sing = [] if phi.is_zero() else singularities(phi, order)
    approx = None
    if sample_t and phi.level == 1 and not phi.is_zero():
        m = default_order(phi.order + 1) if order is None else order
        approx = robust_pade(phi, m, m)

    def one(theta: float) -> SummabilityVerdict:
        hit = blocking(sing, theta, clearance)
        samples = []
        if not hit and sample_t and phi.level == 1:
            for r in sample_t:
                t = abs(r) * cmath.exp(1j * theta)
                val = 0j if approx is None else _ray_integral(approx, theta, t)
                samples.append((t, val))
        return SummabilityVerdict(float(theta), not hit, hit, clearance, samples)

    directions = [float(d) for d in directions]
    n = workers or thread_count()
    if n <= 1 or len(directions) <= 1:
        return [one(d) for d in directions]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(one, directions))


def verdicts_json(verdicts) -> str:
    return json.dumps([v.to_dict() for v in verdicts], indent=2)


def verdicts_csv(verdicts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta_degrees", "summable", "n_poles", "nearest_pole_re", "nearest_pole_im"])
    for v in verdicts:
        d = v.to_dict()
        near = v.evidence[0].location if v.evidence else None
        w.writerow([repr(d["theta_degrees"]), int(v.summable), len(v.evidence),
                    "" if near is None else repr(near.real),
                    "" if near is None else repr(near.imag)])
    return buf.getvalue()


def equispaced(count: int) -> list[float]:
    return [2 * math.pi * k / count for k in range(count)]


# ---------------------------------------------------------------------------
# growth of the traces u_{*,n}(t) in n


@dataclass(frozen=True)
class TraceFamilyReport:
    ok: bool
    verdict: str  # "pass", "fail" or "inconclusive"
    reason: str
    probes: list       # (t, ray angle) per probe
    columns: list      # per probe: list of (n, value, method)
    curvature: list    # per probe: fitted slope of the ratio statistic times span


_DYADIC_BITS = 48


def _exact_taylor(raw, t: complex):
    """Exact sum of ``raw[j] t**j`` with ``t`` rounded to a dyadic rational.

    Works on Gaussian integers over a common denominator, which is much
    faster than complex arithmetic on fractions.
    """
    k = _DYADIC_BITS
    A, B = round(t.real * 2 ** k), round(t.imag * 2 ** k)
    D = math.lcm(*(Fraction(c).denominator for c in raw))
    P = [int(Fraction(c) * D) for c in raw]
    J = len(P) - 1
    re, im = P[J], 0
    for j in range(J - 1, -1, -1):
        re, im = re * A - im * B, re * B + im * A
        re += P[j] << (k * (J - j))
        # im gets no constant term
    den = D << (k * J)
    total = complex(float(Fraction(re, den)), float(Fraction(im, den)))
    log_t = math.log(abs(complex(A, B))) - k * math.log(2) if (A or B) else -math.inf

    def log_mag(j):
        c = Fraction(raw[j])
        if c == 0:
            return -math.inf
        return math.log(abs(c.numerator)) - math.log(c.denominator) + j * log_t

    return total, [log_mag(j) for j in (J - 2, J - 1, J)]


def _direct_sum(col: TSeries, t: complex):
    """Taylor sum of a column at ``t`` and whether its tail is negligible.

    Exact columns are summed exactly, so cancellation between large terms
    costs nothing.
    """
    raw = col.raw()
    if len(raw) < 3:
        return None, False
    if col.mode is Mode.EXACT:
        total, logs = _exact_taylor(raw, t)
    else:
        terms = np.array([complex(c) for c in raw]) * t ** np.arange(len(raw))
        total = complex(np.sum(terms))
        mags = np.abs(terms)
        if np.max(mags) > 1e6 * abs(total):
            return total, False  # cancellation has eaten the digits
        with np.errstate(divide="ignore"):
            logs = list(np.log(mags[-3:]))
    if not np.isfinite(total) or total == 0:
        return total, False
    size = math.log(abs(total))
    reliable = logs[2] <= logs[0] and max(logs) <= size + math.log(1e-12)
    return total, reliable


def _plain_pade(c: np.ndarray, rho: float, m: int) -> Pade:
    """Unreduced ``[m/m]`` fit; unlike the robust variant its error changes with ``m``."""
    Z = _toeplitz(c, m, m)
    C = Z[m + 1:2 * m + 1, :]
    b = np.linalg.lstsq(C[:, 1:], -C[:, 0], rcond=None)[0]
    b = np.concatenate([[1.0], b])
    a = Z[:m + 1, :] @ b
    a, b = _unscale(a, b, rho)
    return Pade(a, b, m, m)


def _laplace_column(col: TSeries, ray: float, t: complex, clearance: float):
    """Laplace sum of one column, or ``None`` unless three Padé orders agree."""
    phi = borel(col, 1)
    if phi.order + 1 < MIN_SCAN_COEFFS:
        return None
    if phi.is_zero():
        return 0j
    m = min(default_order(phi.order + 1), COLUMN_MAX_ORDER)
    try:
        if blocking(singularities(phi, m), ray, clearance):
            return None
        c, rho = _scaled(phi)
    except (InsufficientCoefficients, OverflowError, np.linalg.LinAlgError):
        return None
    vals = []
    # a spurious pole-zero pair on the ray spoils one order, not its neighbours
    for k in range(m, max(m - 6, 0), -1):
        try:
            vals.append(_ray_integral(_plain_pade(c, rho, k), ray, t, rtol=1e-10))
        except (LaplaceError, QuadratureError, np.linalg.LinAlgError):
            continue
        if len(vals) == 3:
            break
    if len(vals) < 3:
        return None
    v = vals[0]
    if any(abs(w - v) > COLUMN_TOL * max(abs(v), 1e-300) for w in vals[1:]):
        return None
    return v


def _columns(u: BivariateSeries) -> list[tuple[int, TSeries]]:
    J, N = u.truncation
    cols = []
    for n in range(N + 1):
        col = u.z_col(n)
        if hasattr(u, "trace_order"):
            Jn = u.trace_order(n)
            if Jn < 0:
                break
            col = col.truncate(Jn)
        cols.append((n, col))
    return cols


def check_trace_family(u: BivariateSeries, theta: float, t_probe: complex = 0.1,
                       margin: float = math.radians(15),
                       clearance: float = DEFAULT_CLEARANCE) -> TraceFamilyReport:
    """Necessary condition ``|u_{*,n}(t)| <= C k**n n!`` on a sector around ``theta``.

    The traces are evaluated at three probes of modulus ``|t_probe|``: on the
    ray itself and just beyond the edges of a half plane bisected by it.  At
    each probe ``log(|u_{*,n}(t)| / n!)`` is fitted by a quadratic in ``n``;
    the bound fails when the fitted curvature halves the implied z-radius
    across the fitted columns.  A positive real ``t_probe`` is read as a
    modulus.
    """
    t_probe = complex(t_probe)
    r = abs(t_probe)
    if r == 0:
        raise ValueError("probe must be nonzero")
    positive_real = t_probe.imag == 0 and t_probe.real > 0
    if not positive_real and _angle_gap(cmath.phase(t_probe), theta) > 1e-9:
        raise ValueError("t_probe must lie on the ray arg t = theta")
    cols = _columns(u)
    nonzero = [(n, c) for n, c in cols if not c.is_zero()]
    probes = [(r * cmath.exp(1j * theta), theta),
              (r * cmath.exp(1j * (theta + math.pi / 2 + margin)), theta + 2 * margin),
              (r * cmath.exp(1j * (theta - math.pi / 2 - margin)), theta - 2 * margin)]
    if len(nonzero) < 4:
        return TraceFamilyReport(True, "pass", "fewer than four nonzero traces", probes, [], [])
    all_values, curv = [], []
    failed, short = False, False
    for t, ray in probes:
        values = []
        for n, col in nonzero:
            val, ok = _direct_sum(col, t)
            method = "taylor"
            if not ok:
                val, method = _laplace_column(col, ray, t, clearance), "laplace"
            if val is not None and val != 0:
                values.append((n, val, method))
        all_values.append(values)
        if len(values) < 4:
            short = True
            curv.append(math.nan)
            continue
        n = np.array([v[0] for v in values], dtype=float)
        y = np.array([math.log(abs(v[1])) - math.lgamma(v[0] + 1) for v in values])
        c2 = np.polyfit(n, y, 2)[0]
        stat = float(2 * c2 * (n[-1] - n[0]))
        curv.append(stat)
        if stat > math.log(2):
            failed = True
    if failed:
        return TraceFamilyReport(False, "fail", "trace growth exceeds any k^n n! bound",
                                 probes, all_values, curv)
    if short:
        return TraceFamilyReport(False, "inconclusive",
                                 "too few traces could be evaluated at some probe",
                                 probes, all_values, curv)
    return TraceFamilyReport(True, "pass", "trace growth compatible with k^n n!",
                             probes, all_values, curv)
