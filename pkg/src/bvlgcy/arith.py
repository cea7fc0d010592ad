"""Exact rational helpers, truncated polynomial rings, Gamma-ratio collapse,
Bernoulli polynomials and multi-precision Gamma evaluation.

Rationals are :class:`fractions.Fraction`.  Floats appear only through
``mpmath`` and only where a caller asks for them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import mpmath
import sympy

Rational = Fraction

DEFAULT_PREC = 256
MAX_BERNOULLI = 32


class NonIntegralShift(ValueError):
    pass


class PoleAtNonPositiveInteger(ValueError):
    pass


def frac(x: Fraction) -> Fraction:
    """Fractional part <x> in [0, 1)."""
    x = Fraction(x)
    return x - math.floor(x)


def is_integral(x: Fraction) -> bool:
    return Fraction(x).denominator == 1


def to_mp(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpmathify(x)


def fstr(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# truncated commutative polynomial ring k[s_1..s_n]/(s_i^{m_i+1})


class TruncPoly:
    """Polynomial in nilpotent symbols; coefficients may be Fraction or mpmath."""

    __slots__ = ("syms", "maxpow", "c")

    def __init__(self, syms: Sequence[str], maxpow: Sequence[int], coeffs: Mapping | None = None):
        self.syms = tuple(syms)
        self.maxpow = tuple(maxpow)
        self.c = {}
        for e, v in (coeffs or {}).items():
            e = tuple(e)
            if all(a <= m for a, m in zip(e, self.maxpow)) and v != 0:
                self.c[e] = v

    # construction helpers
    @classmethod
    def const(cls, syms, maxpow, v):
        return cls(syms, maxpow, {(0,) * len(syms): v})

    @classmethod
    def linear(cls, syms, maxpow, lin: Sequence, const=0):
        d = {(0,) * len(syms): const}
        for i, a in enumerate(lin):
            if a:
                e = [0] * len(syms)
                e[i] = 1
                d[tuple(e)] = a
        return cls(syms, maxpow, d)

    def _like(self, coeffs):
        return TruncPoly(self.syms, self.maxpow, coeffs)

    def constant(self):
        return self.c.get((0,) * len(self.syms), 0)

    def coeff(self, e: Sequence[int]):
        return self.c.get(tuple(e), 0)

    def monomials(self) -> Iterable[tuple[int, ...]]:
        return product(*(range(m + 1) for m in self.maxpow))

    def __add__(self, other):
        if not isinstance(other, TruncPoly):
            other = TruncPoly.const(self.syms, self.maxpow, other)
        d = dict(self.c)
        for e, v in other.c.items():
            d[e] = d.get(e, 0) + v
        return self._like(d)

    __radd__ = __add__

    def __neg__(self):
        return self._like({e: -v for e, v in self.c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, TruncPoly):
            return self._like({e: v * other for e, v in self.c.items()})
        d: dict = {}
        for e1, v1 in self.c.items():
            for e2, v2 in other.c.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if all(a <= m for a, m in zip(e, self.maxpow)):
                    d[e] = d.get(e, 0) + v1 * v2
        return self._like(d)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = TruncPoly.const(self.syms, self.maxpow, 1)
        for _ in range(n):
            out = out * self
        return out

    def total_order(self) -> int:
        return sum(self.maxpow)

    def inverse(self):
        c0 = self.constant()
        if c0 == 0:
            raise ZeroDivisionError("collapsed factor has zero constant term")
        if isinstance(c0, int):
            c0 = Fraction(c0)
        nil = (self - c0) * (1 / c0)
        out = TruncPoly.const(self.syms, self.maxpow, 1 / c0)
        term = TruncPoly.const(self.syms, self.maxpow, 1 / c0)
        for _ in range(self.total_order()):
            term = term * (-nil)
            out = out + term
        return out

    def exp_nilpotent(self):
        """exp(p) for p without constant term."""
        if self.constant() != 0:
            raise ValueError("exp_nilpotent needs zero constant term")
        out = TruncPoly.const(self.syms, self.maxpow, 1)
        term = TruncPoly.const(self.syms, self.maxpow, 1)
        for j in range(1, self.total_order() + 1):
            term = term * self * (Fraction(1, j))
            out = out + term
        return out

    def map(self, f):
        return self._like({e: f(v) for e, v in self.c.items()})

    def __eq__(self, other):
        if not isinstance(other, TruncPoly):
            return NotImplemented
        return self.syms == other.syms and self.c == other.c

    def __repr__(self):
        if not self.c:
            return "0"
        parts = []
        for e in sorted(self.c):
            mon = "*".join(f"{s}^{a}" if a > 1 else s for s, a in zip(self.syms, e) if a)
            parts.append(f"({self.c[e]})" + (f"*{mon}" if mon else ""))
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# Gamma ratios with integral shifts


@dataclass(frozen=True)
class GammaPair:
    """(Gamma(L + offset + shift) / Gamma(L + offset)) ** sign, L = sum lin_i * s_i."""

    lin: tuple
    offset: Fraction
    shift: Fraction
    sign: int = 1


@dataclass(frozen=True)
class GammaRatioForm:
    syms: tuple
    factors: tuple  # of GammaPair
    scalar: Fraction = Fraction(1)

    def times(self, other: "GammaRatioForm") -> "GammaRatioForm":
        assert self.syms == other.syms
        return GammaRatioForm(self.syms, self.factors + other.factors, self.scalar * other.scalar)

    def evaluate(self, values: Sequence, prec: int = DEFAULT_PREC):
        """Numeric value with symbols substituted, via mpmath Gamma (for cross checks)."""
        with mpmath.workprec(prec):
            out = to_mp(self.scalar)
            for f in self.factors:
                L = sum(to_mp(a) * to_mp(v) for a, v in zip(f.lin, values))
                base = L + to_mp(f.offset)
                r = mpmath.gamma(base + to_mp(f.shift)) / mpmath.gamma(base)
                out *= r if f.sign > 0 else 1 / r
            return out


def pochhammer_collapse(r: GammaRatioForm, nilpotency: Mapping[str, int]) -> TruncPoly:
    """Collapse every pair to a finite product in the truncated ring."""
    maxpow = tuple(nilpotency[s] for s in r.syms)
    one = TruncPoly.const(r.syms, maxpow, Fraction(1))
    out = one * Fraction(r.scalar)
    for f in r.factors:
        if not is_integral(f.shift):
            raise NonIntegralShift(f"shift {f.shift} is not an integer")
        n = int(f.shift)
        lin = [Fraction(a) for a in f.lin]
        prod_ = one
        # Gamma(L+o+n)/Gamma(L+o) = prod_{j<n}(L+o+j), or 1/prod_{1<=j<=-n}(L+o-j)
        offsets = [Fraction(f.offset) + j for j in range(n)] if n >= 0 else \
            [Fraction(f.offset) - j for j in range(1, -n + 1)]
        for o in offsets:
            prod_ = prod_ * TruncPoly.linear(r.syms, maxpow, lin, o)
        up = (n >= 0) == (f.sign > 0)
        out = out * (prod_ if up else prod_.inverse())
    return out


# ---------------------------------------------------------------------------
# Bernoulli polynomials


_X = sympy.Symbol("x")


@lru_cache(maxsize=None)
def _bernoulli_coeffs(d: int) -> tuple:
    p = sympy.Poly(sympy.bernoulli(d, _X), _X)
    return tuple(Fraction(int(c.p), int(c.q)) for c in p.all_coeffs())


def bernoulli_polynomial(d: int, x: Fraction, max_degree: int = MAX_BERNOULLI) -> Fraction:
    if d < 0 or d > max_degree:
        raise ValueError(f"Bernoulli degree {d} outside 0..{max_degree}")
    out = Fraction(0)
    for c in _bernoulli_coeffs(d):
        out = out * x + c
    return out


# ---------------------------------------------------------------------------
# multi-precision Gamma and series


def mp_gamma(x, prec: int = DEFAULT_PREC) -> mpmath.mpc:
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        if x.denominator == 1 and x <= 0:
            raise PoleAtNonPositiveInteger(str(x))
    with mpmath.workprec(prec):
        v = to_mp(x) if isinstance(x, Fraction) else mpmath.mpmathify(x)
        if mpmath.im(v) == 0 and mpmath.re(v) <= 0 and mpmath.re(v) == mpmath.floor(mpmath.re(v)):
            raise PoleAtNonPositiveInteger(str(v))
        return mpmath.mpc(mpmath.gamma(v))


def series_gamma_affine(alpha, beta, order: int, prec: int = DEFAULT_PREC) -> list:
    """Taylor coefficients of Gamma(alpha + beta*x) at x=0 up to x^order."""
    with mpmath.workprec(prec):
        alpha = to_mp(alpha)
        beta = to_mp(beta)
        logc = [mpmath.mpf(0)] * (order + 1)
        for j in range(1, order + 1):
            logc[j] = mpmath.polygamma(j - 1, alpha) * beta**j / mpmath.factorial(j)
        return [mpmath.gamma(alpha) * c for c in series_exp(logc)]


def series_exp(a: list) -> list:
    """exp of a power series with a[0] == 0, same length."""
    n = len(a)
    out = [mpmath.mpf(0)] * n
    out[0] = mpmath.mpf(1)
    # out' = a' out
    for k in range(1, n):
        s = 0
        for j in range(1, k + 1):
            s += j * a[j] * out[k - j]
        out[k] = s / k
    return out


def series_mul(a: list, b: list) -> list:
    n = min(len(a), len(b))
    return [sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(n)]


def series_inv(a: list) -> list:
    n = len(a)
    out = [0] * n
    out[0] = 1 / a[0]
    for k in range(1, n):
        out[k] = -sum(a[j] * out[k - j] for j in range(1, k + 1)) / a[0]
    return out
