"""Stacky fan of the ambient quotient (P(v) x P(w) x C*) / (C*)^3.

Rays rho_1..rho_8 live in Q^5; rho_1..rho_3 span the curve part, rho_4..rho_7
the K3 part and rho_8 = -(rho_1 + rho_4)/2 encodes the involution.  A lattice
point (a, b, c, k) of the S-extended kernel has coordinates

    lambda = a*Q_1 + b*Q_2 + c*Q_3 - sum_j k_j s_j  (plus k_j on ray 8+j)

where Q is the weight matrix transposed and s_j the box coefficients of the
j-th extension ray.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .arith import frac, is_integral
from .statespace import AmbientSector
from .weights import E_IDX, K_IDX, OrbifoldSpec

HALF = Fraction(1, 2)


class NotInLambdaS(ValueError):
    pass


@dataclass(frozen=True)
class BoxElement:
    phases: tuple  # coefficients on rho_1..rho_7, each in [0, 1)
    tau: Fraction

    @property
    def sector(self) -> AmbientSector:
        return AmbientSector(self.phases, self.tau)

    @property
    def label(self) -> str:
        return self.sector.label

    @property
    def age(self) -> Fraction:
        return sum(self.phases, Fraction(0))

    @property
    def nE(self) -> int:
        return sum(1 for i in E_IDX if self.phases[i] == 0)

    @property
    def nK(self) -> int:
        return sum(1 for i in K_IDX if self.phases[i] == 0)

    @property
    def in_Y(self) -> bool:
        return self.nE >= 2 and self.nK >= 2


@dataclass(frozen=True)
class ExtensionRay:
    box: BoxElement
    coeffs: tuple  # s_{j,1..8}


@dataclass(frozen=True)
class LatticePoint:
    a: Fraction
    b: Fraction
    c: Fraction
    k: tuple = ()

    def degree(self) -> Fraction:
        return self.a + self.b + self.c + sum(self.k)

    def key(self):
        return (self.degree(), self.a, self.b, self.c, self.k)

    def as_strings(self) -> dict:
        f = lambda x: f"{Fraction(x).numerator}/{Fraction(x).denominator}"
        return {"a": f(self.a), "b": f(self.b), "c": f(self.c), "k": list(self.k)}


@dataclass(frozen=True)
class StackyFanData:
    spec: OrbifoldSpec
    rho: tuple  # 8 columns in Q^5
    cones: tuple  # maximal cones, 0-based ray indices
    weight_matrix: tuple  # 3 rows of length 8
    extension: tuple  # ExtensionRay

    @property
    def m(self) -> int:
        return len(self.extension)

    def gale_product(self) -> list[list[Fraction]]:
        """rho . Q (5 x 3); zero when Q spans the kernel."""
        return [[sum(self.rho[i][r] * self.weight_matrix[j][i] for i in range(8)) for j in range(3)]
                for r in range(5)]


def _rays(spec: OrbifoldSpec) -> tuple:
    v = spec.curve.weights
    w = spec.k3_weights
    z = Fraction(0)
    r1 = (Fraction(-v[1], v[0]), Fraction(-v[2], v[0]), z, z, z)
    r2 = (Fraction(1), z, z, z, z)
    r3 = (z, Fraction(1), z, z, z)
    r4 = (z, z, Fraction(-w[1], w[0]), Fraction(-w[2], w[0]), Fraction(-w[3], w[0]))
    r5 = (z, z, Fraction(1), z, z)
    r6 = (z, z, z, Fraction(1), z)
    r7 = (z, z, z, z, Fraction(1))
    r8 = tuple(-(a + b) / 2 for a, b in zip(r1, r4))
    return (r1, r2, r3, r4, r5, r6, r7, r8)


def _solve(cols: list, target: tuple) -> list[Fraction]:
    """Exact Gauss-Jordan for a square system cols * x = target."""
    n = len(cols)
    A = [[cols[j][i] for j in range(n)] + [target[i]] for i in range(n)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [A[i][n] for i in range(n)]


def _lattice_generators(rho) -> list:
    unit = [tuple(Fraction(int(i == j)) for j in range(5)) for i in range(5)]
    return unit + [rho[0], rho[3], rho[7]]


def _cone_box(rho, cone) -> set:
    """Fractional coordinates of N modulo the sublattice spanned by the cone's rays."""
    cols = [rho[i] for i in cone]
    gens = [tuple(frac(x) for x in _solve(cols, g)) for g in _lattice_generators(rho)]
    seen = {tuple(Fraction(0) for _ in cone)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(frac(x + y) for x, y in zip(p, g))
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return seen


def _tau(spec: OrbifoldSpec, phases) -> Fraction:
    # Z has weight 1 on both curves: X phase = v0 * u + tau with u the Z phase
    return frac(phases[0] - spec.curve.weights[0] * phases[2])


def box_from_phases(spec: OrbifoldSpec, phases) -> BoxElement:
    phases = tuple(Fraction(p) for p in phases)
    return BoxElement(phases, _tau(spec, phases))


@lru_cache(maxsize=None)
def _full_box(spec: OrbifoldSpec) -> tuple:
    rho = _rays(spec)
    out = set()
    for cone in _cones():
        for coords in _cone_box(rho, cone):
            ph = [Fraction(0)] * 7
            for i, a in zip(cone, coords):
                ph[i] = a
            out.add(box_from_phases(spec, ph))
    return tuple(sorted(out, key=lambda b: (b.age, b.phases)))


def _cones() -> list:
    return [tuple(sorted(set(range(3)) - {i}) + sorted(set(range(3, 7)) - {j}))
            for i in range(3) for j in range(3, 7)]


def enumerate_box(fan_or_spec, full: bool = False) -> list[BoxElement]:
    """Box(Y) (or all of Box(X) with full=True), sorted by (age, phases)."""
    spec = fan_or_spec.spec if isinstance(fan_or_spec, StackyFanData) else fan_or_spec
    box = _full_box(spec)
    return list(box) if full else [b for b in box if b.in_Y]


def _extension(spec: OrbifoldSpec) -> tuple:
    out = []
    for b in enumerate_box(spec):
        if b.age == 1 and b.label != "1_σ":
            out.append(ExtensionRay(b, tuple(b.phases) + (Fraction(0),)))
    return tuple(out)


@lru_cache(maxsize=None)
def build_fan(spec: OrbifoldSpec) -> StackyFanData:
    v, w = spec.curve.weights, spec.k3_weights
    alpha = (tuple(Fraction(x) for x in v + (0, 0, 0, 0, 0)),
             tuple(Fraction(x) for x in (0, 0, 0) + w + (0,)),
             tuple(Fraction(x) for x in (1, 0, 0, 1, 0, 0, 0, 2)))
    return StackyFanData(spec, _rays(spec), tuple(_cones()), alpha, _extension(spec))


# ---------------------------------------------------------------------------
# Mori cone, lattice points, valuation


def mori_contains(p, spec: OrbifoldSpec) -> bool:
    a, b, c = (Fraction(x) for x in p[:3])
    return c >= 0 and spec.curve.weights[0] * a + c >= 0 and spec.k3_weights[0] * b + c >= 0


def lambda_vector(p: LatticePoint, fan: StackyFanData) -> tuple:
    al = fan.weight_matrix
    lam = [p.a * al[0][i] + p.b * al[1][i] + p.c * al[2][i] for i in range(8)]
    for kj, ext in zip(p.k, fan.extension):
        for i in range(8):
            lam[i] -= kj * ext.coeffs[i]
    return tuple(lam) + tuple(Fraction(kj) for kj in p.k)


def in_lambda_S(p: LatticePoint, fan: StackyFanData) -> bool:
    lam = lambda_vector(p, fan)
    if not all(is_integral(x) for x in lam[7:]):
        return False
    return any(all(is_integral(lam[i]) for i in range(7) if i not in cone) for cone in fan.cones)


def valuation(p: LatticePoint, fan: StackyFanData) -> BoxElement:
    if not in_lambda_S(p, fan):
        raise NotInLambdaS(str(p))
    lam = lambda_vector(p, fan)
    return box_from_phases(fan.spec, [frac(-lam[i]) for i in range(7)])


def extended_effective(p: LatticePoint, fan: StackyFanData) -> bool:
    """NE x R^m_{>=0}, read on the lambda coordinates of rays 1, 4 and 8."""
    if any(kj < 0 for kj in p.k):
        return False
    lam = lambda_vector(p, fan)
    return lam[0] >= 0 and lam[3] >= 0 and lam[7] >= 0


def _candidates(const: list, weights: list, lo: Fraction, hi: Fraction) -> list:
    """All x in [lo, hi] with weights[i]*x + const[i] integral for some i."""
    out = set()
    for wi, ci in zip(weights, const):
        if wi == 0:
            continue
        # x = (n - ci)/wi
        n0 = math.ceil(lo * wi + ci)
        n1 = math.floor(hi * wi + ci)
        for n in range(n0, n1 + 1):
            out.add((Fraction(n) - ci) / wi)
    return sorted(out)


def _compositions(m: int, total: int):
    """Tuples of m non-negative integers with sum <= total."""
    if m == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(m - 1, total - first):
            yield (first,) + rest


def _points(fan: StackyFanData, bound, sides=("E", "K")) -> list[LatticePoint]:
    spec = fan.spec
    bound = Fraction(bound)
    v0, w0 = spec.curve.weights[0], spec.k3_weights[0]
    m = fan.m
    use_E, use_K = "E" in sides, "K" in sides
    if not use_K:
        m = 0
    out = []
    cmax = bound * 6 * 4 + 1  # generous; trimmed by the degree test below
    c = Fraction(0)
    while c <= cmax:
        for kt in _compositions(m, int(bound)):
            ks = Fraction(sum(kt))
            if c + ks > bound + c * (Fraction(1, v0) * use_E + Fraction(1, w0) * use_K):
                continue
            sE = [sum(kj * fan.extension[j].coeffs[i] for j, kj in enumerate(kt)) for i in range(8)]
            amin = (sE[0] - c) / v0 if use_E else Fraction(0)
            bmin = (sE[3] - c) / w0 if use_K else Fraction(0)
            room = bound - c - ks - (amin if use_E else 0) - (bmin if use_K else 0)
            if room < 0:
                continue
            if use_E:
                v = spec.curve.weights
                aconst = [c - sE[0], -sE[1], -sE[2]]
                a_list = _candidates(aconst, list(v), amin, amin + room)
            else:
                a_list = [Fraction(0)]
            for a in a_list:
                if use_K:
                    w = spec.k3_weights
                    bconst = [c - sE[3], -sE[4], -sE[5], -sE[6]]
                    rem = bound - c - ks - a
                    b_list = _candidates(bconst, list(w), bmin, rem)
                else:
                    b_list = [Fraction(0)]
                for b in b_list:
                    out.append(LatticePoint(a, b, c, kt))
        c += HALF
    return out


def enumerate_points(fan: StackyFanData, bound) -> dict:
    """All Lambda E points of degree <= bound, grouped by Box(Y) element."""
    groups: dict = {}
    for p in _points(fan, bound):
        if p.degree() > bound or not in_lambda_S(p, fan) or not extended_effective(p, fan):
            continue
        b = valuation(p, fan)
        if not b.in_Y:
            continue
        groups.setdefault(b, []).append(p)
    for b in groups:
        groups[b].sort(key=LatticePoint.key)
    return groups


def enumerate_lambda_E(fan: StackyFanData, box: BoxElement, bound) -> list[LatticePoint]:
    return enumerate_points(fan, bound).get(box, [])


# ---------------------------------------------------------------------------
# single-factor points for the mixed theories


def factor_points(fan: StackyFanData, side: str, bound) -> list[tuple[LatticePoint, tuple]]:
    """Points of the GW factor of a mixed theory: (a, c) for side E, (b, c, k) for side K.

    Returns (point, factor phases, tau) triples; the factor sector must keep at
    least two coordinates fixed.
    """
    idx = E_IDX if side == "E" else K_IDX
    out = []
    for p in _points(fan, bound, sides=(side,)):
        if p.degree() > bound or p.c < 0:
            continue
        lam = lambda_vector(p, fan)
        if not is_integral(lam[7]) or not all(is_integral(x) for x in lam[8:]):
            continue
        if sum(1 for i in idx if not is_integral(lam[i])) > len(idx) - 1:
            continue
        if lam[idx[0]] < 0:
            continue
        ph = tuple(frac(-lam[i]) for i in idx)
        if sum(1 for x in ph if x == 0) < 2:
            continue
        tau = frac(p.c + sum(kj * e.box.tau for kj, e in zip(p.k, fan.extension)))
        out.append((p, ph, tau))
    out.sort(key=lambda t: t[0].key())
    return out
