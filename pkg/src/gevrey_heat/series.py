"""Truncated power series in ``t`` and ``z`` with divided coefficients.

A univariate series stores ``c[0..N]`` and stands for ``sum c[n] x**n / n!``.
A bivariate series stores ``u[j, n]`` for ``sum u[j, n] t**j/j! z**n/n!``.
In that normalization differentiation and anti-differentiation are index
shifts, and products pick up binomial weights.

Every series carries a :class:`Mode`.  Exact series hold
:class:`fractions.Fraction` entries in an object array; float series hold
``complex128``.  Arithmetic across modes raises :class:`ModeError`.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import ClassVar, Iterable, Sequence

import numpy as np

#: Largest t-order accepted in float mode.  Divided coefficients of a
#: 1-Gevrey series grow like (2j)!/j!, which leaves double range near j = 85.
FLOAT_MAX_T_ORDER = 80


class Mode(str, enum.Enum):
    EXACT = "exact"
    FLOAT = "float"


class ModeError(TypeError):
    """Exact and float data met in one operation."""


def as_mode(mode: Mode | str) -> Mode:
    return mode if isinstance(mode, Mode) else Mode(mode)


def coerce(value, mode: Mode):
    """Convert a scalar to the coefficient type of ``mode``.

    Integers are accepted in both modes.  Fractions (and ``"p/q"`` strings)
    are exact only; Python floats and complex numbers are float only.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if mode is Mode.EXACT:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (int, np.integer)):
            return Fraction(int(value))
        if isinstance(value, str):
            return Fraction(value)
        raise ModeError(f"cannot use {type(value).__name__} in exact mode")
    if isinstance(value, (int, np.integer)):
        return complex(int(value))
    if isinstance(value, (float, complex, np.floating, np.complexfloating)):
        return complex(value)
    raise ModeError(f"cannot use {type(value).__name__} in float mode")


def _check_same(a, b) -> Mode:
    if a.mode is not b.mode:
        raise ModeError(f"mode mismatch: {a.mode.value} vs {b.mode.value}")
    return a.mode


@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    return math.factorial(n)


def factorials(n: int, mode: Mode) -> np.ndarray:
    """Array ``[0!, 1!, ..., n!]`` in the storage type of ``mode``."""
    if mode is Mode.EXACT:
        return np.array([factorial(k) for k in range(n + 1)], dtype=object)
    return np.array([float(factorial(k)) if k <= 170 else math.inf for k in range(n + 1)])


def _inv_factorials(n: int, mode: Mode) -> np.ndarray:
    if mode is Mode.EXACT:
        return np.array([Fraction(1, factorial(k)) for k in range(n + 1)], dtype=object)
    return np.array([1.0 / factorial(k) if k <= 170 else math.exp(-math.lgamma(k + 1))
                     for k in range(n + 1)])


def _zeros(shape, mode: Mode) -> np.ndarray:
    if mode is Mode.EXACT:
        out = np.empty(shape, dtype=object)
        out[...] = Fraction(0)
        return out
    return np.zeros(shape, dtype=complex)


def _array(values, mode: Mode, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=object)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional coefficient array")
    if mode is Mode.EXACT:
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            out[idx] = coerce(v, mode)
        return out
    return np.array([coerce(v, mode) for v in arr.ravel()], dtype=complex).reshape(arr.shape)


def _infer_mode(values) -> Mode:
    for v in np.array(values, dtype=object).ravel():
        if isinstance(v, (float, complex, np.floating, np.complexfloating)):
            return Mode.FLOAT
    return Mode.EXACT


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def conv_raw(f: np.ndarray, g: np.ndarray, size: int, mode: Mode) -> np.ndarray:
    """Truncated Cauchy product of raw coefficient vectors."""
    out = _zeros(size, mode)
    for k in range(min(size, len(f))):
        fk = f[k]
        if fk == 0:
            continue
        m = min(size - k, len(g))
        out[k:k + m] = out[k:k + m] + fk * g[:m]
    return out


def conv_raw2(f: np.ndarray, g: np.ndarray, shape, mode: Mode) -> np.ndarray:
    """Two-dimensional truncated Cauchy product of raw coefficient arrays."""
    rows, cols = shape
    out = _zeros(shape, mode)
    for (p, q), fpq in np.ndenumerate(f[:rows, :cols]):
        if fpq == 0:
            continue
        r = min(rows - p, g.shape[0])
        c = min(cols - q, g.shape[1])
        out[p:p + r, q:q + c] = out[p:p + r, q:q + c] + fpq * g[:r, :c]
    return out


def format_coeff(value, mode: Mode) -> str:
    if mode is Mode.EXACT:
        return f"{value.numerator}/{value.denominator}"
    return f"{float(value.real)!r},{float(value.imag)!r}"


def parse_coeff(text: str, mode: Mode):
    if mode is Mode.EXACT:
        return Fraction(text)
    re, im = text.split(",")
    return complex(float(re), float(im))


# ---------------------------------------------------------------------------
# univariate series


@dataclass(frozen=True, eq=False)
class _Univariate:
    coeffs: np.ndarray
    mode: Mode

    var: ClassVar[str] = "x"

    def __post_init__(self):
        mode = as_mode(self.mode)
        object.__setattr__(self, "mode", mode)
        arr = np.asarray(self.coeffs)
        if arr.ndim != 1 or len(arr) == 0:
            raise ValueError("need at least one coefficient")
        if mode is Mode.FLOAT and arr.dtype != complex:
            arr = arr.astype(complex)
        object.__setattr__(self, "coeffs", _frozen(arr))

    @classmethod
    def from_coeffs(cls, values: Iterable, mode: Mode | str | None = None):
        values = list(values)
        mode = _infer_mode(values) if mode is None else as_mode(mode)
        return cls(_array(values, mode, 1), mode)

    @classmethod
    def from_raw(cls, raw: Iterable, mode: Mode | str | None = None):
        """Build from ordinary Taylor coefficients ``a_n`` of ``sum a_n x**n``."""
        tmp = cls.from_coeffs(raw, mode)
        return cls(tmp.coeffs * factorials(tmp.order, tmp.mode), tmp.mode)

    @classmethod
    def zeros(cls, order: int, mode: Mode | str = Mode.EXACT):
        mode = as_mode(mode)
        return cls(_zeros(order + 1, mode), mode)

    @classmethod
    def constant(cls, value, order: int, mode: Mode | str = Mode.EXACT):
        mode = as_mode(mode)
        arr = _zeros(order + 1, mode)
        arr[0] = coerce(value, mode)
        return cls(arr, mode)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n):
        return self.coeffs[n]

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:6])
        more = ", ..." if len(self.coeffs) > 6 else ""
        return f"{type(self).__name__}([{head}{more}], order={self.order}, mode={self.mode.value})"

    def _new(self, coeffs):
        return type(self)(coeffs, self.mode)

    def raw(self) -> np.ndarray:
        """Ordinary Taylor coefficients ``c[n] / n!``."""
        return self.coeffs * _inv_factorials(self.order, self.mode)

    def truncate(self, order: int):
        if order > self.order:
            raise ValueError(f"cannot extend truncation {self.order} to {order}")
        return self._new(self.coeffs[:order + 1])

    def to_float(self):
        if self.mode is Mode.FLOAT:
            return self
        return type(self)(np.array([complex(c) for c in self.coeffs]), Mode.FLOAT)

    def equals(self, other) -> bool:
        return (type(self) is type(other) and self.mode is other.mode
                and self.order == other.order
                and bool(np.all(self.coeffs == other.coeffs)))

    def valuation(self) -> int:
        """Index of the first nonzero coefficient; ``order + 1`` if none."""
        nz = [n for n, c in enumerate(self.coeffs) if c != 0]
        return nz[0] if nz else self.order + 1

    def is_zero(self) -> bool:
        return self.valuation() > self.order

    # arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, _Univariate):
            return NotImplemented
        _check_same(self, other)
        n = min(self.order, other.order) + 1
        return self._new(self.coeffs[:n] + other.coeffs[:n])

    def __neg__(self):
        return self._new(-self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, _Univariate):
            return NotImplemented
        return self + (-other)

    def scale(self, c):
        return self._new(self.coeffs * coerce(c, self.mode))

    def __mul__(self, other):
        if isinstance(other, _Univariate):
            mode = _check_same(self, other)
            n = min(self.order, other.order)
            raw = conv_raw(self.raw()[:n + 1], other.raw()[:n + 1], n + 1, mode)
            return self._new(raw * factorials(n, mode))
        return self.scale(other)

    __rmul__ = scale

    def derivative(self):
        if self.order == 0:
            raise ValueError("cannot differentiate a series truncated at order 0")
        return self._new(self.coeffs[1:])

    def antiderivative(self):
        """Antiderivative vanishing at 0; truncation grows by one."""
        return self._new(np.concatenate([_zeros(1, self.mode), self.coeffs]))

    def mul_var(self):
        """Multiply by the variable: ``(x f)[n] = n f[n-1]``."""
        n = np.arange(self.order + 2, dtype=object if self.mode is Mode.EXACT else float)
        shifted = np.concatenate([_zeros(1, self.mode), self.coeffs])
        return self._new(shifted * n)

    def div_var(self):
        """Divide by the variable; requires ``f(0) = 0``."""
        if self.coeffs[0] != 0:
            raise ValueError("series does not vanish at the origin")
        if self.order == 0:
            raise ValueError("nothing left after dividing by the variable")
        n = np.arange(1, self.order + 1)
        if self.mode is Mode.EXACT:
            w = np.array([Fraction(1, int(k)) for k in n], dtype=object)
        else:
            w = 1.0 / n
        return self._new(self.coeffs[1:] * w)

    def inverse(self):
        """Multiplicative inverse by the linear recurrence ``f * g = 1``."""
        if self.coeffs[0] == 0:
            raise ZeroDivisionError("series is not invertible: constant term is zero")
        raw = self.raw()
        out = _zeros(self.order + 1, self.mode)
        out[0] = 1 / raw[0] if self.mode is Mode.EXACT else 1.0 / raw[0]
        for n in range(1, self.order + 1):
            s = sum((raw[k] * out[n - k] for k in range(1, n + 1) if raw[k] != 0),
                    _zeros(1, self.mode)[0])
            out[n] = -s / raw[0]
        return self._new(out * factorials(self.order, self.mode))

    def evaluate(self, x):
        """Numerical value of the truncated sum at ``x`` (complex arrays ok)."""
        raw = np.array([complex(c) for c in self.raw()])
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=complex), raw)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "var": self.var, "truncation": [self.order],
                "coeffs": [format_coeff(c, self.mode) for c in self.coeffs]}

    @classmethod
    def from_dict(cls, data: dict):
        mode = as_mode(data["mode"])
        if data.get("var", cls.var) != cls.var:
            raise ValueError(f"expected a series in {cls.var}, got {data['var']}")
        coeffs = [parse_coeff(s, mode) for s in data["coeffs"]]
        if len(coeffs) != data["truncation"][0] + 1:
            raise ValueError("coefficient count does not match truncation")
        return cls(_array(coeffs, mode, 1), mode)


class ZSeries(_Univariate):
    """Series in ``z``: coefficient functions ``f_{j,*}`` and the diffusivity."""

    var = "z"


class TSeries(_Univariate):
    """Series in ``t``: traces ``u_{*,n}(t)``."""

    var = "t"

    def __post_init__(self):
        super().__post_init__()
        if self.mode is Mode.FLOAT and self.order > FLOAT_MAX_T_ORDER:
            raise ValueError(f"float-mode t-order {self.order} exceeds {FLOAT_MAX_T_ORDER}")


# ---------------------------------------------------------------------------
# bivariate series


@dataclass(frozen=True, eq=False)
class BivariateSeries:
    """Dense ``(J+1) x (N+1)`` block of divided coefficients ``u[j, n]``."""

    coeffs: np.ndarray
    mode: Mode

    def __post_init__(self):
        mode = as_mode(self.mode)
        object.__setattr__(self, "mode", mode)
        arr = np.asarray(self.coeffs)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError("need a nonempty 2-d coefficient array")
        if mode is Mode.FLOAT:
            if arr.dtype != complex:
                arr = arr.astype(complex)
            if arr.shape[0] - 1 > FLOAT_MAX_T_ORDER:
                raise ValueError(
                    f"float-mode t-order {arr.shape[0] - 1} exceeds {FLOAT_MAX_T_ORDER}")
        object.__setattr__(self, "coeffs", _frozen(arr))

    @classmethod
    def from_coeffs(cls, values, mode: Mode | str | None = None):
        mode = _infer_mode(values) if mode is None else as_mode(mode)
        return cls(_array(values, mode, 2), mode)

    @classmethod
    def from_raw(cls, raw, mode: Mode | str | None = None):
        tmp = cls.from_coeffs(raw, mode)
        J, N = tmp.truncation
        w = np.outer(factorials(J, tmp.mode), factorials(N, tmp.mode))
        return cls(tmp.coeffs * w, tmp.mode)

    @classmethod
    def zeros(cls, J: int, N: int, mode: Mode | str = Mode.EXACT):
        mode = as_mode(mode)
        return cls(_zeros((J + 1, N + 1), mode), mode)

    @classmethod
    def constant(cls, value, J: int, N: int, mode: Mode | str = Mode.EXACT):
        mode = as_mode(mode)
        arr = _zeros((J + 1, N + 1), mode)
        arr[0, 0] = coerce(value, mode)
        return cls(arr, mode)

    @classmethod
    def from_rows(cls, rows: Sequence[ZSeries]):
        """Stack coefficient functions ``u_{j,*}``; truncation is the shortest row."""
        mode = rows[0].mode
        for r in rows:
            _check_same(rows[0], r)
        N = min(r.order for r in rows)
        return cls(np.array([r.coeffs[:N + 1] for r in rows], dtype=rows[0].coeffs.dtype), mode)

    @classmethod
    def from_cols(cls, cols: Sequence[TSeries]):
        """Place traces ``u_{*,n}`` side by side."""
        mode = cols[0].mode
        for c in cols:
            _check_same(cols[0], c)
        J = min(c.order for c in cols)
        return cls(np.array([c.coeffs[:J + 1] for c in cols], dtype=cols[0].coeffs.dtype).T, mode)

    @classmethod
    def from_z(cls, f: ZSeries, J: int = 0):
        """A t-independent series ``f(z)`` known to t-order ``J``."""
        arr = _zeros((J + 1, f.order + 1), f.mode)
        arr[0] = f.coeffs
        return cls(arr, f.mode)

    @classmethod
    def from_t(cls, g: TSeries, N: int = 0):
        """A z-independent series ``g(t)`` known to z-order ``N``."""
        arr = _zeros((g.order + 1, N + 1), g.mode)
        arr[:, 0] = g.coeffs
        return cls(arr, g.mode)

    @property
    def truncation(self) -> tuple[int, int]:
        J, N = self.coeffs.shape
        return J - 1, N - 1

    def __getitem__(self, idx):
        return self.coeffs[idx]

    def __repr__(self):
        J, N = self.truncation
        return f"{type(self).__name__}(truncation=({J}, {N}), mode={self.mode.value})"

    def _new(self, coeffs):
        return BivariateSeries(coeffs, self.mode)

    def t_row(self, j: int) -> ZSeries:
        """The coefficient function ``u_{j,*}(z)``."""
        return ZSeries(self.coeffs[j], self.mode)

    def z_col(self, n: int) -> TSeries:
        """The trace ``u_{*,n}(t)``."""
        return TSeries(self.coeffs[:, n], self.mode)

    def raw(self) -> np.ndarray:
        J, N = self.truncation
        return self.coeffs * np.outer(_inv_factorials(J, self.mode), _inv_factorials(N, self.mode))

    def truncate(self, J: int, N: int):
        J0, N0 = self.truncation
        if J > J0 or N > N0:
            raise ValueError(f"cannot extend truncation {(J0, N0)} to {(J, N)}")
        return self._new(self.coeffs[:J + 1, :N + 1])

    def to_float(self):
        if self.mode is Mode.FLOAT:
            return self
        conv = np.vectorize(complex, otypes=[complex])
        return BivariateSeries(conv(self.coeffs), Mode.FLOAT)

    def equals(self, other) -> bool:
        return (isinstance(other, BivariateSeries) and self.mode is other.mode
                and self.truncation == other.truncation
                and bool(np.all(self.coeffs == other.coeffs)))

    def z_valuation(self) -> int:
        """First column holding a nonzero entry; ``N + 1`` if the block is zero."""
        for n in range(self.coeffs.shape[1]):
            if any(c != 0 for c in self.coeffs[:, n]):
                return n
        return self.coeffs.shape[1]

    def is_zero(self) -> bool:
        return self.z_valuation() == self.coeffs.shape[1]

    # arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, BivariateSeries):
            return NotImplemented
        _check_same(self, other)
        J = min(self.truncation[0], other.truncation[0])
        N = min(self.truncation[1], other.truncation[1])
        return self._new(self.coeffs[:J + 1, :N + 1] + other.coeffs[:J + 1, :N + 1])

    def __neg__(self):
        return self._new(-self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, BivariateSeries):
            return NotImplemented
        return self + (-other)

    def scale(self, c):
        return self._new(self.coeffs * coerce(c, self.mode))

    def __mul__(self, other):
        if isinstance(other, BivariateSeries):
            mode = _check_same(self, other)
            J = min(self.truncation[0], other.truncation[0])
            N = min(self.truncation[1], other.truncation[1])
            raw = conv_raw2(self.raw(), other.raw(), (J + 1, N + 1), mode)
            return self._new(raw * np.outer(factorials(J, mode), factorials(N, mode)))
        return self.scale(other)

    __rmul__ = scale

    def dt(self):
        if self.truncation[0] == 0:
            raise ValueError("cannot differentiate in t a series truncated at t-order 0")
        return self._new(self.coeffs[1:])

    def dz(self):
        if self.truncation[1] == 0:
            raise ValueError("cannot differentiate in z a series truncated at z-order 0")
        return self._new(self.coeffs[:, 1:])

    def dt_inv(self):
        """Antiderivative in t vanishing at ``t = 0``."""
        pad = _zeros((1, self.coeffs.shape[1]), self.mode)
        return self._new(np.concatenate([pad, self.coeffs], axis=0))

    def dz_inv(self):
        """Antiderivative in z vanishing at ``z = 0``."""
        pad = _zeros((self.coeffs.shape[0], 1), self.mode)
        return self._new(np.concatenate([pad, self.coeffs], axis=1))

    def dz2(self):
        return self.dz().dz()

    def dz_inv2(self):
        return self.dz_inv().dz_inv()

    def mul_z(self, a: ZSeries):
        """Product with a t-independent factor ``a(z)``."""
        _check_same(self, a)
        N = min(self.truncation[1], a.order)
        raw_a = a.raw()[:N + 1]
        raw = self.raw()[:, :N + 1]
        out = _zeros(raw.shape, self.mode)
        for k, ak in enumerate(raw_a):
            if ak == 0:
                continue
            out[:, k:] = out[:, k:] + ak * raw[:, :N + 1 - k]
        J = self.truncation[0]
        return self._new(out * np.outer(factorials(J, self.mode), factorials(N, self.mode)))

    def div_z(self):
        """Divide by ``z``; requires the ``n = 0`` column to vanish."""
        if any(c != 0 for c in self.coeffs[:, 0]):
            raise ValueError("series does not vanish at z = 0")
        N = self.truncation[1]
        if N == 0:
            raise ValueError("nothing left after dividing by z")
        if self.mode is Mode.EXACT:
            w = np.array([Fraction(1, k) for k in range(1, N + 1)], dtype=object)
        else:
            w = 1.0 / np.arange(1, N + 1)
        return self._new(self.coeffs[:, 1:] * w)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "truncation": list(self.truncation),
                "coeffs": [format_coeff(c, self.mode) for c in self.coeffs.ravel()]}

    @classmethod
    def from_dict(cls, data: dict):
        mode = as_mode(data["mode"])
        J, N = data["truncation"]
        coeffs = [parse_coeff(s, mode) for s in data["coeffs"]]
        if len(coeffs) != (J + 1) * (N + 1):
            raise ValueError("coefficient count does not match truncation")
        arr = _array(coeffs, mode, 1).reshape(J + 1, N + 1)
        return cls(arr, mode)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


# module-level spellings of the operator set ---------------------------------

def add(a, b):
    return a + b


def mul(a, b):
    return a * b


def dt(u: BivariateSeries) -> BivariateSeries:
    return u.dt()


def dz(u: BivariateSeries) -> BivariateSeries:
    return u.dz()


def dt_inv(u: BivariateSeries) -> BivariateSeries:
    return u.dt_inv()


def dz_inv(u: BivariateSeries) -> BivariateSeries:
    return u.dz_inv()


def dz2(u: BivariateSeries) -> BivariateSeries:
    return u.dz2()


def dz_inv2(u: BivariateSeries) -> BivariateSeries:
    return u.dz_inv2()


def series_from_dict(data: dict):
    """Load any series written by ``to_dict``."""
    if len(data["truncation"]) == 2:
        return BivariateSeries.from_dict(data)
    return {"z": ZSeries, "t": TSeries}[data.get("var", "z")].from_dict(data)
