"""Rational-function expressions in ``t`` and ``z`` and their exact expansion.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | 't' | 'z' | '(' expr ')'
    NUMBER := digits ['.' digits]

Exponents must reduce to integer constants (negative ones allowed).  A
rational literal such as ``3/2`` is just a division of two integers.  The
expression is reduced to ``p/q`` with polynomial ``p`` and ``q`` and expanded
at the origin through the linear recurrence ``q * u = p``, so expansion is
exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .series import BivariateSeries, Mode, TSeries, ZSeries, _zeros

VARIABLES = ("t", "z")


class ParseError(ValueError):
    """Malformed expression; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ExpansionError(ValueError):
    """The rational function has no power series at the origin."""


# polynomials are dicts {(i, k): Fraction} with exponents of t and z

def _padd(p, q, sign=1):
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, Fraction(0)) + sign * c
    return {m: c for m, c in out.items() if c != 0}


def _pmul(p, q):
    out = {}
    for (a, b), c in p.items():
        for (d, e), g in q.items():
            m = (a + d, b + e)
            out[m] = out.get(m, Fraction(0)) + c * g
    return {m: c for m, c in out.items() if c != 0}


def _pconst(p):
    if not p:
        return Fraction(0)
    if set(p) == {(0, 0)}:
        return p[(0, 0)]
    return None


ONE = {(0, 0): Fraction(1)}


@dataclass(frozen=True)
class Rational:
    """``num / den`` with polynomial numerator and denominator."""

    num: dict
    den: dict

    def __add__(self, o):
        return Rational(_padd(_pmul(self.num, o.den), _pmul(o.num, self.den)),
                        _pmul(self.den, o.den))

    def __sub__(self, o):
        return Rational(_padd(_pmul(self.num, o.den), _pmul(o.num, self.den), -1),
                        _pmul(self.den, o.den))

    def __mul__(self, o):
        return Rational(_pmul(self.num, o.num), _pmul(self.den, o.den))

    def __truediv__(self, o):
        if not o.num:
            raise ZeroDivisionError("division by zero")
        return Rational(_pmul(self.num, o.den), _pmul(self.den, o.num))

    def __neg__(self):
        return Rational({m: -c for m, c in self.num.items()}, self.den)

    def power(self, k: int):
        base = self if k >= 0 else Rational(self.den, self.num)
        if k < 0 and not self.num:
            raise ZeroDivisionError("zero to a negative power")
        out = Rational(ONE, ONE)
        for _ in range(abs(k)):
            out = out * base
        return out

    def constant(self):
        n, d = _pconst(self.num), _pconst(self.den)
        if n is None or d is None:
            return None
        return n / d

    def variables(self) -> set[str]:
        used = set()
        for (a, b) in list(self.num) + list(self.den):
            if a:
                used.add("t")
            if b:
                used.add("z")
        return used

    def normalized(self) -> "Rational":
        """Cancel the largest monomial ``t^a z^b`` dividing both parts."""
        mons = list(self.num) + list(self.den)
        if not self.num:
            return Rational({}, ONE)
        a = min(m[0] for m in mons)
        b = min(m[1] for m in mons)
        shift = lambda p: {(i - a, k - b): c for (i, k), c in p.items()}
        return Rational(shift(self.num), shift(self.den))


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|(\*\*|[-+*/^()])|([A-Za-z_]\w*))")


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("num", m.group(1), start))
        elif m.group(2):
            out.append(("op", m.group(2), start))
        else:
            out.append(("name", m.group(3), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, variables):
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {value!r}, found {what}", tok[2])

    def parse(self) -> Rational:
        r = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return r

    def expr(self):
        r = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            r = r + rhs if op == "+" else r - rhs
        return r

    def term(self):
        r = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                r = r * rhs
            else:
                try:
                    r = r / rhs
                except ZeroDivisionError:
                    raise ParseError("division by zero", tok[2]) from None
        return r

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            r = self.unary()
            return -r if tok[1] == "-" else r
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.take()
            at = self.peek()[2]
            exponent = self.unary().constant()
            if exponent is None or exponent.denominator != 1:
                raise ParseError("exponent must be an integer constant", at)
            try:
                return base.power(int(exponent))
            except ZeroDivisionError:
                raise ParseError("zero raised to a negative power", at) from None
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "num":
            return Rational({(0, 0): Fraction(value)} if Fraction(value) else {}, ONE)
        if kind == "name":
            if value not in self.variables:
                allowed = ", ".join(self.variables)
                raise ParseError(f"unknown name {value!r} (allowed: {allowed})", pos)
            return Rational({(1, 0) if value == "t" else (0, 1): Fraction(1)}, ONE)
        if value == "(":
            r = self.expr()
            self.expect(")")
            return r
        what = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {what}", pos)


def parse_expression(text: str, variables=VARIABLES) -> Rational:
    """Parse ``text`` into a :class:`Rational` over the given variables."""
    return _Parser(text, variables).parse()


def _expand_raw(r: Rational, J: int, N: int) -> np.ndarray:
    r = r.normalized()
    q00 = r.den.get((0, 0), Fraction(0))
    if q00 == 0:
        raise ExpansionError("denominator vanishes at the origin; no power series there")
    out = _zeros((J + 1, N + 1), Mode.EXACT)
    den = [(m, c) for m, c in r.den.items() if m != (0, 0)]
    for j in range(J + 1):
        for n in range(N + 1):
            s = r.num.get((j, n), Fraction(0))
            for (a, b), c in den:
                if a <= j and b <= n:
                    s -= c * out[j - a, n - b]
            out[j, n] = s / q00
    return out


def parse_rational(expr: str, var: str = "z", order: int = 10):
    """Expand a one-variable rational function to ``order`` exactly.

    Returns a :class:`ZSeries` or :class:`TSeries` (divided coefficients).
    """
    if var not in VARIABLES:
        raise ValueError(f"variable must be one of {VARIABLES}")
    r = parse_expression(expr, (var,))
    if var == "z":
        raw = _expand_raw(r, 0, order)[0]
        return ZSeries.from_raw(raw, Mode.EXACT)
    raw = _expand_raw(r, order, 0)[:, 0]
    return TSeries.from_raw(raw, Mode.EXACT)


def parse_series(expr: str, truncation: tuple[int, int]) -> BivariateSeries:
    """Expand a rational function of ``t`` and ``z`` to truncation ``(J, N)``."""
    J, N = truncation
    raw = _expand_raw(parse_expression(expr), J, N)
    return BivariateSeries.from_raw(raw, Mode.EXACT)


def _trim(a: list[Fraction]) -> list[Fraction]:
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    r = _trim(a)
    while r and len(r) >= len(b):
        f = r[-1] / b[-1]
        off = len(r) - len(b)
        for i, c in enumerate(b):
            r[off + i] -= f * c
        r = _trim(r[:-1])
    return r


def _poly_gcd(p: list[Fraction], q: list[Fraction]) -> list[Fraction]:
    a, b = _trim(p), _trim(q)
    while b:
        a, b = b, _poly_rem(a, b)
    return a


def default_radius(expr: str, var: str = "z") -> float | None:
    """Half the distance from 0 to the nearest pole of a one-variable rational.

    Returns ``None`` for a polynomial, whose norms need a user-chosen radius.
    """
    r = parse_expression(expr, (var,)).normalized()
    axis = 0 if var == "t" else 1

    def coeffs(p):
        deg = max((m[axis] for m in p), default=0)
        out = [Fraction(0)] * (deg + 1)
        for m, c in p.items():
            out[m[axis]] += c
        return out

    num, den = coeffs(r.num), coeffs(r.den)
    g = _poly_gcd(num, den)
    if len(g) > 1:
        den = _poly_divide(den, g)
    while len(den) > 1 and den[-1] == 0:
        den.pop()
    if len(den) <= 1:
        return None
    roots = np.roots([float(c) for c in reversed(den)])
    return float(np.min(np.abs(roots))) / 2


def _poly_divide(p: list[Fraction], d: list[Fraction]) -> list[Fraction]:
    p = list(p)
    out = [Fraction(0)] * (len(p) - len(d) + 1)
    for k in range(len(out) - 1, -1, -1):
        f = p[k + len(d) - 1] / d[-1]
        out[k] = f
        for i, c in enumerate(d):
            p[k + i] -= f * c
    return out
