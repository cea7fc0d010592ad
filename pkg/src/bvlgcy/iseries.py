"""Genus-zero I-function terms for the four phases.

Every coefficient is an exact rational polynomial in xE = D_E/z and
xK = D_K/z, truncated by the nilpotency of the output sector.  A term stands
for  z^{z_exponent} * sum_{e,k} c_{e,k} xE^e xK^k * 1_sector  times its
Novikov monomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import mpmath
import sympy

from .arith import (GammaPair, GammaRatioForm, TruncPoly, bernoulli_polynomial, frac,
                    pochhammer_collapse, to_mp)
from .fan import (BoxElement, LatticePoint, build_fan, enumerate_points, factor_points,
                  lambda_vector, valuation)
from .statespace import factor_narrow
from .weights import Curve, OrbifoldSpec, build_group, GroupElement, sector_info

SYMS = ("xE", "xK")


class NonNarrowInput(ValueError):
    pass


class ConstraintViolation(ValueError):
    pass


class NonUnitLeading(ValueError):
    pass


class UnsupportedCurve(ValueError):
    pass


class UnsupportedHypotheses(ValueError):
    pass


class UnknownBoxLabel(KeyError):
    pass


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Factor:
    name: str
    pair: GammaPair
    z_power: int


@dataclass
class CohomElement:
    """Map (sector, e, k) -> Rational with e, k the powers of D_E/z and D_K/z."""

    entries: dict = field(default_factory=dict)

    @classmethod
    def from_poly(cls, sector: str, poly: TruncPoly) -> "CohomElement":
        return cls({(sector, e[0], e[1]): Fraction(v) for e, v in poly.c.items() if v})

    def __add__(self, other: "CohomElement") -> "CohomElement":
        d = dict(self.entries)
        for k, v in other.entries.items():
            d[k] = d.get(k, 0) + v
        return CohomElement({k: v for k, v in d.items() if v})

    def scale(self, x) -> "CohomElement":
        return CohomElement({k: v * x for k, v in self.entries.items() if v * x})


@dataclass(frozen=True)
class ISeriesTerm:
    theory: str
    index: tuple
    z_exponent: int
    sector: str
    age: Fraction
    coefficient: TruncPoly
    novikov: tuple  # ((variable, exponent), ...)
    factors: tuple = ()
    meta: tuple = ()

    @property
    def cohom(self) -> CohomElement:
        return CohomElement.from_poly(self.sector, self.coefficient)

    def z_parts(self) -> dict:
        """{z power: {(sector, e, k): coefficient}} with D_E^e D_K^k explicit."""
        out: dict = {}
        for (e, k), v in self.coefficient.c.items():
            out.setdefault(self.z_exponent - e - k, {})[(self.sector, e, k)] = Fraction(v)
        return out

    def degree(self) -> Fraction:
        return sum((Fraction(v) for _, v in self.novikov), Fraction(0))

    def sort_key(self):
        return (self.degree(), self.index)


def _monomial(d: dict) -> tuple:
    return tuple(sorted((k, Fraction(v)) for k, v in d.items() if v))


# ---------------------------------------------------------------------------
# GW


def _A(name: str, lin: tuple, lam: Fraction, inverse: bool = False) -> Factor:
    """z^{-ceil(l)} Gamma(x + <<l>>)/Gamma(x + l + 1), or its reciprocal."""
    lam = Fraction(lam)
    n = math.ceil(lam)
    off = 1 - frac(-lam)
    sign = 1 if inverse else -1
    return Factor(name, GammaPair(tuple(lin), off, Fraction(n), sign), n if inverse else -n)


def _divisor_lins(spec: OrbifoldSpec, m: int) -> list:
    v, w = spec.curve.weights, spec.k3_weights
    lins = [(Fraction(v[i]), Fraction(0)) for i in range(3)]
    lins += [(Fraction(0), Fraction(w[i])) for i in range(4)]
    lins += [(Fraction(0), Fraction(0))] * (1 + m)
    return lins


def gw_factors(p: LatticePoint, spec: OrbifoldSpec, rays=None) -> list[Factor]:
    """Ray factors (all rays or the given subset) and the two bundle factors."""
    fan = build_fan(spec)
    lam = lambda_vector(p, fan)
    lins = _divisor_lins(spec, fan.m)
    idx = range(len(lam)) if rays is None else rays
    out = [_A(f"D{i + 1}", lins[i], lam[i]) for i in idx]
    v0, w0 = spec.curve.weights[0], spec.k3_weights[0]
    if rays is None or 0 in rays:
        out.append(_A("E1", (Fraction(2 * v0), Fraction(0)), 2 * lam[0], inverse=True))
    if rays is None or 3 in rays:
        out.append(_A("E2", (Fraction(0), Fraction(2 * w0)), 2 * lam[3], inverse=True))
    return out


def _collapse(factors, maxpow, scalar=Fraction(1)) -> TruncPoly:
    form = GammaRatioForm(SYMS, tuple(f.pair for f in factors), Fraction(scalar))
    return pochhammer_collapse(form, dict(zip(SYMS, maxpow)))


def _novikov_gw(p: LatticePoint) -> tuple:
    d = {"q1": p.a, "q2": p.b, "q3": p.c}
    d.update({f"x{j + 1}": kj for j, kj in enumerate(p.k)})
    return _monomial(d)


def gw_term(p: LatticePoint, spec: OrbifoldSpec) -> ISeriesTerm:
    fan = build_fan(spec)
    b = valuation(p, fan)
    factors = gw_factors(p, spec)
    maxpow = (b.nE - 2, b.nK - 2)
    coeff = _collapse(factors, maxpow)
    z = 1 + sum(f.z_power for f in factors)
    return ISeriesTerm("GW", (p.a, p.b, p.c, p.k), z, b.label, b.age, coeff, _novikov_gw(p),
                       tuple(factors))


def gw_terms(spec: OrbifoldSpec, bound) -> list[ISeriesTerm]:
    fan = build_fan(spec)
    out = [gw_term(p, spec) for pts in enumerate_points(fan, bound).values() for p in pts]
    return sorted(out, key=ISeriesTerm.sort_key)


@dataclass(frozen=True)
class GammaProduct:
    """prod Gamma(lin . x + offset)^{exponent}, times z^{z_power}."""

    factors: tuple  # (lin, offset, exponent)
    z_power: Fraction

    def evaluate(self, xs, prec: int = 256):
        with mpmath.workprec(prec):
            out = mpmath.mpf(1)
            for lin, off, ex in self.factors:
                arg = sum(to_mp(a) * x for a, x in zip(lin, xs)) + to_mp(off)
                out *= mpmath.gamma(arg) ** ex
            return out

    def series(self, maxpow, prec: int = 256) -> TruncPoly:
        """Taylor expansion in the nilpotent xE, xK via log-Gamma polygamma series."""
        with mpmath.workprec(prec):
            order = sum(maxpow)
            log = TruncPoly.const(SYMS, maxpow, mpmath.mpf(0))
            const = mpmath.mpf(1)
            for lin, off, ex in self.factors:
                a = to_mp(off)
                const *= mpmath.gamma(a) ** ex
                L = TruncPoly.linear(SYMS, maxpow, [to_mp(x) for x in lin])
                Lp = TruncPoly.const(SYMS, maxpow, mpmath.mpf(1))
                for j in range(1, order + 1):
                    Lp = Lp * L
                    log = log + Lp * (ex * mpmath.polygamma(j - 1, a) / mpmath.factorial(j))
            return log.exp_nilpotent() * const


def gw_prefactors(b: BoxElement, spec: OrbifoldSpec) -> dict:
    """K_b (curve side) and L_b (K3 side): the Gamma factors fixed by the sector."""
    if not b.in_Y:
        raise UnknownBoxLabel(b.label)
    lins = _divisor_lins(spec, 0)
    v0, w0 = spec.curve.weights[0], spec.k3_weights[0]
    # the numerator Gamma(x + <<lambda_i>>) of every ray depends on the sector only
    E = tuple((lins[i], 1 - b.phases[i], 1) for i in range(3))
    E += (((Fraction(2 * v0), Fraction(0)), Fraction(1), -1),)
    K = tuple((lins[i], 1 - b.phases[i], 1) for i in range(3, 7))
    K += (((Fraction(0), Fraction(2 * w0)), Fraction(1), -1),)
    return {"K": GammaProduct(E, Fraction(0)), "L": GammaProduct(K, Fraction(0))}


# ---------------------------------------------------------------------------
# direct product oracle

_xE, _xK = sympy.symbols("xE xK")


def _direct_ray(lin, lam: Fraction) -> list:
    """Factors (D + d z)^{+-1} of prod_{<d>=<l>, d<=0}(D+dz) / prod_{<d>=<l>, d<=l}(D+dz).

    Returned as (d, exponent) pairs; D + d z = z (D/z + d).
    """
    lam = Fraction(lam)
    out = []
    if lam >= 0:
        d = frac(lam) if frac(lam) > 0 else Fraction(1)
        while d <= lam:
            out.append((lin, d, -1))
            d += 1
    else:
        d = lam + 1
        while d <= 0:
            out.append((lin, d, 1))
            d += 1
    return out


def direct_product_coefficient(p: LatticePoint, spec: OrbifoldSpec) -> tuple[int, dict]:
    """Independent oracle: z * prod of the defining products, expanded in D/z by sympy."""
    fan = build_fan(spec)
    b = valuation(p, fan)
    lam = lambda_vector(p, fan)
    v, w = spec.curve.weights, spec.k3_weights
    divs = [v[0] * _xE, v[1] * _xE, v[2] * _xE, w[0] * _xK, w[1] * _xK, w[2] * _xK, w[3] * _xK]
    divs += [sympy.Integer(0)] * (1 + fan.m)
    facs = []
    for D, l in zip(divs, lam):
        facs += _direct_ray(D, l)
    facs += [(L, d, -e) for L, d, e in _direct_ray(2 * v[0] * _xE, 2 * lam[0])]
    facs += [(L, d, -e) for L, d, e in _direct_ray(2 * w[0] * _xK, 2 * lam[3])]
    zexp = 1 + sum(e for _, _, e in facs)
    mE, mK = b.nE - 2, b.nK - 2
    ring, gE, gK = sympy.polys.rings.ring("xE,xK", sympy.QQ)

    def trunc(poly):
        return ring({m: c for m, c in poly.items() if m[0] <= mE and m[1] <= mK})

    acc = ring(1)
    for L, d, e in facs:
        lin = ring(sympy.expand(L).subs({_xE: gE.as_expr(), _xK: gK.as_expr()}))
        dq = sympy.QQ(d.numerator, d.denominator)
        if e > 0:
            acc = trunc(acc * (lin + dq))
        else:
            # 1/(d + L) as a finite geometric series in the nilpotent L
            inv, term = ring(0), ring(1) / dq
            for _ in range(mE + mK + 1):
                inv += term
                term = trunc(term * (-lin) / dq)
            acc = trunc(acc * inv)
    coeffs = {(m[0], m[1]): Fraction(int(c.numerator), int(c.denominator))
              for m, c in acc.items() if c != 0}
    return zexp, coeffs


# ---------------------------------------------------------------------------
# homogeneity


def homogeneity_check(terms) -> tuple[bool, object]:
    """Every term: factors internally homogeneous and z_exponent + age = 1."""
    for t in terms:
        for f in t.factors:
            if f.z_power != f.pair.sign * f.pair.shift:
                return False, (t.index, f.name)
        if 1 + sum(f.z_power for f in t.factors) != t.z_exponent:
            return False, (t.index, "z")
        if t.z_exponent + t.age != 1:
            return False, (t.index, "degree")
    return True, None


def drop_factor(t: ISeriesTerm, i: int) -> ISeriesTerm:
    """Negative control: remove one Gamma factor and re-derive the z power."""
    fs = t.factors[:i] + t.factors[i + 1:]
    nil = t.coefficient.maxpow
    coeff = _collapse(fs, nil)
    return ISeriesTerm(t.theory, t.index, 1 + sum(f.z_power for f in fs), t.sector, t.age, coeff,
                       t.novikov, fs, t.meta)


# ---------------------------------------------------------------------------
# FJRW


def fjrw_inputs(spec: OrbifoldSpec) -> list:
    """Narrow sectors of degree 2: the insertions of the narrow I-function."""
    G = build_group(spec)
    out = []
    for h in G.elements:
        info = sector_info(h, spec)
        if info.narrow and info.deg_W == 2:
            out.append(info)
    return sorted(out, key=lambda i: i.label)


def _fjrw_pairs(q, S) -> list:
    # Gamma(q+S)/Gamma(q+<S>+1) = Gamma(o + (floor(S)-1))/Gamma(o), o = q+<S>+1
    return [GammaPair((Fraction(0), Fraction(0)), qk + frac(s) + 1, Fraction(math.floor(s) - 1), 1)
            for qk, s in zip(q, S)]


def fjrw_term(n: dict, spec: OrbifoldSpec) -> ISeriesTerm:
    """n maps narrow sector labels (degree <= 2) to multiplicities."""
    G = build_group(spec)
    q = spec.charges
    S = [Fraction(0)] * 7
    count = 0
    fact = 1
    for lab, mult in sorted(n.items()):
        try:
            h = G.by_label(lab)
        except KeyError:
            raise NonNarrowInput(lab) from None
        info = sector_info(h, spec)
        if not info.narrow or info.deg_W > 2:
            raise NonNarrowInput(f"{lab} (narrow={info.narrow}, degree={info.deg_W})")
        for k in range(7):
            S[k] += mult * info.i_values[k]
        count += mult
        fact *= math.factorial(mult)
    pairs = _fjrw_pairs(q, S)
    form = GammaRatioForm(SYMS, tuple(pairs), Fraction(1, fact))
    coeff = pochhammer_collapse(form, {"xE": 0, "xK": 0})
    z = 1 - count + sum(math.floor(s) for s in S)
    theta = tuple(frac(qk + s) for qk, s in zip(q, S))
    index = tuple(sorted((k, v) for k, v in n.items() if v))
    nov = _monomial({f"t[{k}]": v for k, v in n.items()})
    factors = tuple(Factor(f"k{k}", p, 0) for k, p in enumerate(pairs))
    if not all(theta):
        return ISeriesTerm("FJRW", index, z, "broad", Fraction(0),
                           TruncPoly(SYMS, (0, 0)), nov, factors, (("broad_output", True),))
    h = GroupElement(theta)
    info = sector_info(h, spec)
    return ISeriesTerm("FJRW", index, z, f"φ({info.label})", info.age, coeff, nov, factors)


def fjrw_terms(spec: OrbifoldSpec, max_total: int) -> list[ISeriesTerm]:
    labs = [i.label for i in fjrw_inputs(spec)]
    out = []
    for mult in product(range(max_total + 1), repeat=len(labs)):
        if sum(mult) <= max_total:
            t = fjrw_term(dict(zip(labs, mult)), spec)
            if t.sector != "broad":
                out.append(t)
    return sorted(out, key=lambda t: (sum(v for _, v in t.index), t.index))


def mnc_labels(spec: OrbifoldSpec) -> tuple[str, str, str]:
    """The degree-2 narrow insertions (M, N, C) = J1^3J2, J1J2^3, sigma J1^2J2^2 for (3,1,1,1)."""
    return ("J1^3J2", "J1J2^3", "σJ1^2J2^2")


def mnc_z_exponent(M: int, N: int, C: int) -> int:
    return 1 - M - N - C + 2 * math.floor(Fraction(M, 2) + Fraction(C, 4)) + \
        3 * math.floor(Fraction(N, 3) + Fraction(C, 6))


# ---------------------------------------------------------------------------
# twist operator Delta


@dataclass(frozen=True)
class DeltaSeries:
    """exp(sum_d s_d * coeffs[d] * z^d) with exact Bernoulli coefficients."""

    coeffs: tuple

    def exponent_at(self, s: list, sign: int = 1) -> list:
        return [cd * sd * (sign ** d) for d, (cd, sd) in enumerate(zip(self.coeffs, s))]

    def series(self, s: list, order: int, sign: int = 1) -> list:
        """Coefficients of z^0..z^order, with z replaced by sign*z; exact for rational s."""
        a = self.exponent_at(s, sign)
        a = (a + [0] * (order + 1))[:order + 1]
        c0 = a[0]
        if c0 != 0:
            raise ValueError("series() needs s_0 = 0; use exponent_at for the constant part")
        out = [Fraction(1)] + [Fraction(0)] * order
        for k in range(1, order + 1):
            out[k] = sum(j * a[j] * out[k - j] for j in range(1, k + 1)) / k
        return out


def twist_delta(h, spec: OrbifoldSpec, z_order: int) -> DeltaSeries:
    """Delta on the sector of h: per coordinate B_{d+1}(i_k(h) + q_k)/(d+1)!."""
    if isinstance(h, str):
        h = build_group(spec).by_label(h)
    info = sector_info(h, spec)
    q = spec.charges
    xs = [ik + qk for ik, qk in zip(info.i_values, q)]
    coeffs = tuple(sum(bernoulli_polynomial(d + 1, x, max_degree=max(32, z_order + 1)) for x in xs)
                   / math.factorial(d + 1) for d in range(z_order + 1))
    return DeltaSeries(coeffs)


def euler_modification_check(q: list, S: list, lam, z, terms: int = 60, prec: int = 256):
    """Both sides of exp(-sum_d s_d [B(q+S)-B(q+<S>)]/(d+1)! (-z)^d) = prod (lam + (q+<S>+b)z)."""
    with mpmath.workprec(prec):
        lam = to_mp(lam)
        z = to_mp(z)
        expo = mpmath.mpf(0)
        for d in range(terms):
            sd = -mpmath.log(lam) if d == 0 else mpmath.factorial(d - 1) / lam ** d
            dB = sum(bernoulli_polynomial(d + 1, qk + Sk, max_degree=terms + 1)
                     - bernoulli_polynomial(d + 1, qk + frac(Sk), max_degree=terms + 1)
                     for qk, Sk in zip(q, S))
            expo += sd * to_mp(dB) / mpmath.factorial(d + 1) * (-z) ** d
        lhs = mpmath.exp(-expo)
        rhs = mpmath.mpf(1)
        for qk, Sk in zip(q, S):
            for b in range(math.floor(Sk)):
                rhs *= lam + (to_mp(qk + frac(Sk)) + b) * z
        return lhs, rhs


def euler_limit(q: list, S: list) -> tuple[Fraction, Fraction]:
    """M_n at lambda = 0 over z^{floor S}, against prod Gamma(q+S)/Gamma(q+<S>)."""
    lhs = Fraction(1)
    for qk, Sk in zip(q, S):
        for b in range(math.floor(Sk)):
            lhs *= qk + frac(Sk) + b
    pairs = [GammaPair((Fraction(0), Fraction(0)), qk + frac(Sk), Fraction(math.floor(Sk)), 1)
             for qk, Sk in zip(q, S)]
    rhs = pochhammer_collapse(GammaRatioForm(SYMS, tuple(pairs)), {"xE": 0, "xK": 0}).constant()
    return lhs, Fraction(rhs)


# ---------------------------------------------------------------------------
# mixed theories


def _lg_inputs(spec: OrbifoldSpec, side: str) -> tuple[dict, dict]:
    """Degree-2 narrow insertions of one LG factor: the untwisted and the sigma one."""
    # the sigma insertion has factor degree 1; the other factor's 1_sigma supplies the rest
    ins = factor_narrow(spec, side)
    plain = [n for n in ins if n["tau"] == 0 and n["degree"] == 2]
    sig = [n for n in ins if n["tau"] != 0 and n["degree"] == 1]
    if len(plain) != 1 or len(sig) != 1:
        raise UnsupportedHypotheses(f"{side}-side LG factor of {spec.label} has insertions "
                                    f"{[n['label'] for n in plain + sig]}")
    return plain[0], sig[0]


def _lg_part(spec: OrbifoldSpec, side: str, n3: int, ns: int):
    """Gamma pairs, z power and output (theta, label, age) of the LG factor."""
    from .weights import E_IDX, K_IDX
    idx = E_IDX if side == "E" else K_IDX
    q = [spec.charges[i] for i in idx]
    plain, sig = _lg_inputs(spec, side)
    S = [n3 * a + ns * b for a, b in zip(plain["i"], sig["i"])]
    pairs = _fjrw_pairs(q, S)
    z = sum(math.floor(s) for s in S) - n3
    theta = tuple(frac(qk + s) for qk, s in zip(q, S))
    label = None
    for n in factor_narrow(spec, side):
        if n["theta"] == theta:
            label = n["label"]
    age = sum(theta, Fraction(0))
    return pairs, z, theta, label, age


def _gw_side_factors(p: LatticePoint, spec: OrbifoldSpec, side: str) -> list[Factor]:
    m = len(p.k)
    rays = [0, 1, 2, 7] if side == "E" else [3, 4, 5, 6, 7] + [8 + j for j in range(m)]
    return gw_factors(p, spec, rays)


def _check_mixed(spec: OrbifoldSpec, theory: str):
    if spec.curve is not Curve.QUARTIC:
        raise UnsupportedCurve(f"mixed I-functions are implemented for the quartic curve, not {spec.curve.value}")
    if theory not in ("FJRW-GW", "GW-FJRW"):
        raise ValueError(theory)


def mixed_term(theory: str, index: tuple, spec: OrbifoldSpec) -> ISeriesTerm:
    """index = (n3, n_sigma, point) with point a factor lattice point of the GW side.

    The e^{-z} from the LG unit insertion is factored out and recorded in meta.
    """
    theory = theory.upper()
    _check_mixed(spec, theory)
    n3, ns, p = index
    fan = build_fan(spec)
    lg, gw = ("E", "K") if theory == "FJRW-GW" else ("K", "E")
    lam = lambda_vector(p, fan)
    sig_k = sum(kj for kj, e in zip(p.k, fan.extension) if e.box.tau)
    if gw == "K":
        if ns != 2 * p.c + sig_k:
            raise ConstraintViolation(f"n_sigma={ns} but 2c+sum k={2 * p.c + sig_k}")
    elif ns != 2 * p.c:
        raise ConstraintViolation(f"n_sigma={ns} but 2c={2 * p.c}")
    pairs, zlg, theta, lg_label, lg_age = _lg_part(spec, lg, n3, ns)
    gfac = _gw_side_factors(p, spec, gw)
    from .weights import E_IDX, K_IDX
    idx = K_IDX if gw == "K" else E_IDX
    ph = tuple(frac(-lam[i]) for i in idx)
    nfix = sum(1 for x in ph if x == 0)
    maxpow = (nfix - 2, 0) if gw == "E" else (0, nfix - 2)
    lg_factors = [Factor(f"{lg}{k}", pr, 0) for k, pr in enumerate(pairs)]
    coeff = _collapse(lg_factors + gfac, maxpow, Fraction(1, math.factorial(n3)))
    z = 1 + zlg + sum(f.z_power for f in gfac)
    tau = frac(Fraction(ns, 2))
    if not all(theta):
        sector = "broad"
    else:
        sector = f"φ({lg_label})⊗{_gw_sector_name(ph, tau, gw)}"
    gw_age = sum(ph, Fraction(0))
    age = (lg_age - 1) + gw_age  # half the total degree
    nov = {"t3": n3, "tσ": ns}
    if gw == "K":
        nov.update({"q2": p.b, "q3": p.c})
        nov.update({f"x{j + 1}": kj for j, kj in enumerate(p.k)})
    else:
        nov.update({"q1": p.a, "q3": p.c})
    return ISeriesTerm(theory, (n3, ns, p.a, p.b, p.c, p.k), z, sector, age, coeff,
                       _monomial(nov), tuple(lg_factors + gfac), (("e^{-z}", True),))


def _gw_sector_name(ph: tuple, tau: Fraction, side: str) -> str:
    if not any(ph):
        return "1_0"
    if tau and all(a == 0 for a in ph[1:]):
        return f"1_σ{side}"
    return f"1_{side}[{','.join(map(str, ph))}]"


def mixed_terms(theory: str, spec: OrbifoldSpec, bound: int) -> list[ISeriesTerm]:
    theory = theory.upper()
    _check_mixed(spec, theory)
    fan = build_fan(spec)
    gw = "K" if theory == "FJRW-GW" else "E"
    out = []
    for p, ph, tau in factor_points(fan, gw, bound):
        sig_k = sum(kj for kj, e in zip(p.k, fan.extension) if e.box.tau) if gw == "K" else 0
        ns = 2 * p.c + sig_k
        if ns.denominator != 1:
            continue
        ns = int(ns)
        for n3 in range(bound + 1):
            t = mixed_term(theory, (n3, ns, p), spec)
            if t.sector != "broad":
                out.append(t)
    return sorted(out, key=lambda t: (t.degree(), t.index))


# ---------------------------------------------------------------------------
# mirror map


Series = dict  # monomial tuple -> Fraction


def _smul(a: Series, b: Series, bound) -> Series:
    out: dict = {}
    for ma, va in a.items():
        for mb, vb in b.items():
            d = dict(ma)
            for k, v in mb:
                d[k] = d.get(k, 0) + v
            m = _monomial(d)
            if sum(v for _, v in m) <= bound:
                out[m] = out.get(m, 0) + va * vb
    return {k: v for k, v in out.items() if v}


def _sinv(f: Series, bound) -> Series:
    c0 = f.get((), 0)
    if c0 == 0:
        raise NonUnitLeading("f has zero constant term")
    rest = {k: -v / c0 for k, v in f.items() if k != ()}
    out = {(): Fraction(1) / c0}
    term = {(): Fraction(1) / c0}
    for _ in range(64):
        term = _smul(term, rest, bound)
        if not term:
            break
        for k, v in term.items():
            out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v}


@dataclass
class MirrorMapData:
    theory: str
    unit: str
    f: Series
    g: dict  # (sector, e, k) -> Series
    tau: dict
    metadata: dict = field(default_factory=dict)


def assemble_terms(theory: str, spec: OrbifoldSpec, bound: int) -> list[ISeriesTerm]:
    theory = theory.upper()
    if theory == "GW":
        return gw_terms(spec, bound)
    if theory == "FJRW":
        return fjrw_terms(spec, bound)
    return mixed_terms(theory, spec, bound)


def unit_label(theory: str, spec: OrbifoldSpec) -> str:
    theory = theory.upper()
    if theory == "GW":
        return "1_0"
    if theory == "FJRW":
        return "φ(J1J2)"
    if theory == "FJRW-GW":
        return "φ(J1)⊗1_0"
    return "φ(J2)⊗1_0"


def mirror_map(theory: str, spec: OrbifoldSpec, truncation: int) -> MirrorMapData:
    if truncation < 2:
        raise ValueError("truncation must be at least 2")
    terms = assemble_terms(theory, spec, truncation)
    unit = unit_label(theory, spec)
    f: Series = {}
    g: dict = {}
    for t in terms:
        parts = t.z_parts()
        for zp, entries in parts.items():
            if zp > 1:
                raise NonUnitLeading(f"z^{zp} at {t.index}")
            for key, v in entries.items():
                if zp == 1:
                    if key != (unit, 0, 0):
                        raise NonUnitLeading(f"z^1 on {key} at {t.index}")
                    f[t.novikov] = f.get(t.novikov, 0) + v
                elif zp == 0:
                    g.setdefault(key, {})
                    g[key][t.novikov] = g[key].get(t.novikov, 0) + v
    c0 = f.get((), Fraction(0))
    if c0 == 0:
        raise NonUnitLeading("no z^1 unit term at t = 0")
    f = {k: v / c0 for k, v in f.items()}
    g = {key: {k: v / c0 for k, v in ser.items()} for key, ser in g.items()}
    finv = _sinv(f, truncation)
    tau = {k: _smul(v, finv, truncation) for k, v in g.items()}
    tau = {k: v for k, v in tau.items() if v}
    meta = {"leading_coefficient": c0, "novikov_degree": "a+b+c+sum k (GW); total insertions otherwise"}
    if theory.upper() == "GW":
        w = spec.k3_weights
        v = spec.curve.weights
        meta["divisor_linear_part"] = {
            "D_E": {"t1": v[0], "t2": v[1], "t3": v[2]},
            "D_K": {"t4": w[0], "t5": w[1], "t6": w[2], "t7": w[3]}}
    return MirrorMapData(theory.upper(), unit, f, g, tau, meta)
