"""Mellin-Barnes continuation of the GW I-series and the symplectic maps U_E, U_K, U.

A GW term is split into its E-part (rays X, Y, Z and the bundle of degree 4)
and its K-part (rays x, y, z, w and the bundle of degree 2*w0).  For a single
side with weight w0 (2 for the quartic curve, 3 for the (3,1,1,1) K3), a
coupling integer M0 (n_sigma on the E-side, 2c on the K-side) and
x = D/z the summand over a is

    z^{floor(M0/2)} P(x) qt^{a+x} R(a+x),
    P(x) = Gamma(w0 x + 1 - <M0/2>) Gamma(x+1)^r / Gamma(2 w0 x + 1),
    R(s) = Gamma(2 w0 s + M0 + 1) / (Gamma(w0 s + M0/2 + 1) Gamma(s+1)^r).

Closing the Barnes contour to the left picks up the poles
s + x = -(M0+m)/(2 w0), m >= 1, and gives

    rho_m(x) = (-1)^m / (2 w0 Gamma(m)) * 2 pi i / (e^{2 pi i (s_m)} - 1)
               / (Gamma(1 - m/2) Gamma(1 - (M0+m)/(2 w0))^r) * qt^{-(M0+m)/(2 w0)}.

qt lives on the branch arg(qt) = pi, where the line integral converges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath
import sympy

from .arith import (DEFAULT_PREC, GammaRatioForm, frac, pochhammer_collapse,
                    series_gamma_affine, series_inv, series_mul, to_mp)
from .iseries import SYMS, UnsupportedCurve, UnsupportedHypotheses, _lg_part, fjrw_term
from .statespace import mixed_state_space
from .weights import Curve, OrbifoldSpec

KAPPA = Fraction(1, 4)  # t3 <-> KAPPA * qt^{-1/w0}
SIGMA_PHASE = 1j  # t_sigma carries this phase per insertion
DETOUR = Fraction(1, 10)


class DimensionMismatch(ValueError):
    pass


class NonConvergent(RuntimeError):
    pass


class MismatchAt(AssertionError):
    def __init__(self, index, detail=""):
        super().__init__(f"mismatch at {index}: {detail}")
        self.index = index


@dataclass(frozen=True)
class Side:
    name: str  # "E" or "K"
    w0: int
    r: int  # number of weight-one coordinates

    @property
    def order(self) -> int:
        """Highest power of D/z that survives on the untwisted sector."""
        return self.r - 1


SIDE_E = Side("E", 2, 2)
SIDE_K = Side("K", 3, 3)


def _side(name: str) -> Side:
    return SIDE_E if name == "E" else SIDE_K


def require(side: str, spec: OrbifoldSpec):
    if spec.curve is not Curve.QUARTIC:
        raise UnsupportedCurve("continuation is only available for the quartic elliptic curve")
    if side in ("K", "both") and spec.k3_weights != (3, 1, 1, 1):
        raise UnsupportedHypotheses(f"side {side} needs the K3 weights (3,1,1,1), got {spec.k3_weights}")
    if side not in ("E", "K", "both"):
        raise ValueError(side)


# ---------------------------------------------------------------------------
# residue factors


def _kernel_series(xi, order: int) -> list:
    """Taylor coefficients of 2 pi i / (xi e^{-2 pi i x} - 1)."""
    w = -2j * mpmath.pi
    den = [xi * w**j / mpmath.factorial(j) for j in range(order + 1)]
    den[0] -= 1
    return [2j * mpmath.pi * c for c in series_inv(den)]


def prefactor_series(side: Side, M0: int, order: int) -> list:
    """P(x) of the module docstring."""
    ph = frac(Fraction(M0, 2))
    out = series_gamma_affine(1 - ph, side.w0, order)
    one = series_gamma_affine(1, 1, order)
    for _ in range(side.r):
        out = series_mul(out, one)
    return series_mul(out, series_inv(series_gamma_affine(1, 2 * side.w0, order)))


def residue_point(side: Side, M0: int, m: int) -> Fraction:
    return Fraction(-(M0 + m), 2 * side.w0)


def kernel_factor(side: Side, M0: int, m: int, order: int) -> list:
    """E-type factor 2 pi i/(e^{2 pi i s_m} - 1); depends on (M0 + m) mod 2 w0 only."""
    u = residue_point(side, M0, m)
    xi = mpmath.expjpi(2 * to_mp(u))
    return _kernel_series(xi, order)


def residue_constant(side: Side, M0: int, m: int, split: bool = False):
    """(-1)^m / (2 w0 Gamma(m) Gamma(1-m/2) Gamma(1+u)^r); zero for even m.

    split=True uses 1/Gamma(1-x) = Gamma(x) sin(pi x)/pi on both Gamma factors.
    """
    u = to_mp(residue_point(side, M0, m))
    half = mpmath.mpf(m) / 2
    pre = mpmath.mpf(-1) ** m / (2 * side.w0 * mpmath.gamma(m))
    if split:
        a = mpmath.gamma(half) * mpmath.sinpi(half) / mpmath.pi
        b = mpmath.gamma(-u) * mpmath.sinpi(-u) / mpmath.pi
        return pre * a * b**side.r
    return pre * mpmath.rgamma(1 - half) * mpmath.rgamma(1 + u) ** side.r


def residue_series(side: Side, M0: int, m: int, order: int, split: bool = False) -> list:
    """Coefficients of (D/z)^j in P(x) rho_m(x) without the qt power."""
    c = residue_constant(side, M0, m, split)
    if c == 0:
        return [mpmath.mpc(0)] * (order + 1)
    ser = series_mul(prefactor_series(side, M0, order), kernel_factor(side, M0, m, order))
    return [c * v for v in ser]


@dataclass(frozen=True)
class ResidueTerm:
    side: str
    m: int
    M0: int
    z_power: int
    qt_power: Fraction
    coeffs: tuple  # of mpc, powers of D/z


def _residue_expand(side: Side, M0: int, count: int, prec: int, split: bool) -> list:
    with mpmath.workprec(prec):
        out = []
        for m in range(1, count + 1):
            ser = residue_series(side, M0, m, side.order, split)
            out.append(ResidueTerm(side.name, m, M0, M0 // 2, residue_point(side, M0, m), tuple(ser)))
        return out


def residue_expand_E(M0: int, count: int, spec: OrbifoldSpec, prec: int = DEFAULT_PREC,
                     split: bool = False) -> list[ResidueTerm]:
    """Residue terms m = 1..count for the E-side family with n_sigma = M0."""
    require("E", spec)
    return _residue_expand(SIDE_E, M0, count, prec, split)


def residue_expand_K(M0: int, count: int, spec: OrbifoldSpec, prec: int = DEFAULT_PREC,
                     split: bool = False) -> list[ResidueTerm]:
    """Residue terms n = 1..count for the K-side family with 2c = M0."""
    require("K", spec)
    return _residue_expand(SIDE_K, M0, count, prec, split)


# ---------------------------------------------------------------------------
# Taylor table


def taylor_table(order: int = 2, k=None, prec: int = DEFAULT_PREC) -> dict:
    """Series of Gamma(1+x), 1/Gamma(1+x), Gamma(1/2+x) and k/(e^{-x}-k)."""
    with mpmath.workprec(prec):
        k = mpmath.mpc(k if k is not None else mpmath.expjpi(mpmath.mpf(1) / 3))
        g1 = series_gamma_affine(1, 1, order)
        den = [mpmath.mpf(-1) ** j / mpmath.factorial(j) for j in range(order + 1)]
        den[0] -= k
        return {"gamma_1": g1, "rgamma_1": series_inv(g1),
                "gamma_half": series_gamma_affine(Fraction(1, 2), 1, order),
                "geometric": [k * c for c in series_inv(den)], "k": k}


def taylor_closed_forms(order: int = 2, k=None, prec: int = DEFAULT_PREC) -> dict:
    """The same four series from closed forms in gamma, pi and ln 2."""
    with mpmath.workprec(prec):
        k = mpmath.mpc(k if k is not None else mpmath.expjpi(mpmath.mpf(1) / 3))
        g, p, l2 = mpmath.euler, mpmath.pi, mpmath.ln2
        sp = mpmath.sqrt(p)
        out = {"gamma_1": [1, -g, (g**2 + p**2 / 6) / 2],
               "rgamma_1": [1, g, (g**2 - p**2 / 6) / 2],
               "gamma_half": [sp, -sp * (2 * l2 + g), sp * (2 * l2 + g) ** 2 / 2 + p**2 * sp / 4],
               "geometric": [k / (1 - k), k / (1 - k) ** 2, k * (1 + k) / (2 * (1 - k) ** 3)]}
        return {key: v[:order + 1] for key, v in out.items()}


# ---------------------------------------------------------------------------
# block matrices


@dataclass
class Block:
    labels_in: tuple
    labels_out: tuple
    coeffs: list  # rows x cols of mpc; entry (r, c) multiplies z^powers[r][c]
    powers: list
    pair_in: list  # Gram matrices of source and target
    pair_out: list
    exp_sign: int = 0  # every entry carries e^{exp_sign z}

    def size(self) -> int:
        return len(self.labels_in)

    def at(self, z) -> mpmath.matrix:
        n, k = len(self.labels_out), len(self.labels_in)
        e = mpmath.exp(self.exp_sign * z)
        return mpmath.matrix([[self.coeffs[r][c] * z ** self.powers[r][c] * e for c in range(k)]
                              for r in range(n)])


@dataclass
class BlockMatrix:
    side: str
    blocks: list
    normalization: object = 1
    metadata: dict = field(default_factory=dict)

    def inventory(self) -> dict:
        out: dict = {}
        for b in self.blocks:
            key = f"{len(b.labels_out)}x{b.size()}"
            out[key] = out.get(key, 0) + 1
        return out


def perturb(U: BlockMatrix, block: int, r: int, c: int, eps) -> BlockMatrix:
    """Negative control: copy of U with one entry shifted by eps."""
    blocks = list(U.blocks)
    b = blocks[block]
    coeffs = [list(row) for row in b.coeffs]
    coeffs[r][c] = coeffs[r][c] + eps
    blocks[block] = replace(b, coeffs=coeffs)
    return replace(U, blocks=blocks)


def _gram_series(b: Block) -> dict:
    """M(-z)^T H M(z) collected by powers of z; the e^{+-z} factors cancel."""
    n, k = len(b.labels_out), len(b.labels_in)
    H = b.pair_out
    out: dict = {}
    for i in range(k):
        for j in range(k):
            for r in range(n):
                for s in range(n):
                    if H[r][s] == 0:
                        continue
                    p1, p2 = b.powers[r][i], b.powers[s][j]
                    v = b.coeffs[r][i] * (-1) ** p1 * H[r][s] * b.coeffs[s][j]
                    if v == 0:
                        continue
                    out.setdefault(p1 + p2, [[mpmath.mpc(0)] * k for _ in range(k)])
                    out[p1 + p2][i][j] += v
    return out


def check_symplectic(U: BlockMatrix, tol, prec: int = DEFAULT_PREC) -> dict:
    """Per-block deviation of M(-z)^T H_out M(z) from H_in, exact in z."""
    with mpmath.workprec(prec):
        return _check_symplectic(U, tol)


def _check_symplectic(U: BlockMatrix, tol) -> dict:
    devs = []
    for b in U.blocks:
        n, k = len(b.labels_out), b.size()
        if n != k or len(b.pair_in) != k or len(b.pair_out) != n or \
                any(len(row) != k for row in b.coeffs):
            raise DimensionMismatch(f"block {b.labels_in} -> {b.labels_out}")
        g = _gram_series(b)
        dev = mpmath.mpf(0)
        for p, mat in g.items():
            for i in range(k):
                for j in range(k):
                    target = b.pair_in[i][j] if p == 0 else 0
                    dev = max(dev, abs(mat[i][j] - target))
        if 0 not in g:
            dev = max(dev, max(abs(x) for row in b.pair_in for x in row))
        devs.append({"labels_in": list(b.labels_in), "deviation": dev})
    worst = max((d["deviation"] for d in devs), default=mpmath.mpf(0))
    return {"side": U.side, "passed": bool(worst < tol), "max_deviation": worst, "blocks": devs}


def degree_preserving(b: Block, deg_in: list, deg_out: list) -> bool:
    """deg(target) + 2 * (z power) == deg(source) on every nonzero entry."""
    for r, row in enumerate(b.coeffs):
        for c, v in enumerate(row):
            if v != 0 and deg_out[r] + 2 * b.powers[r][c] != deg_in[c]:
                return False
    return True


# ---------------------------------------------------------------------------
# LG side and columns


def _lg_value(spec: OrbifoldSpec, side: str, n3: int, ns: int):
    """Exact LG coefficient, the unit rescaling prod(q + <S>), z power and output label."""
    pairs, zlg, theta, label, _ = _lg_part(spec, side, n3, ns)
    coeff = pochhammer_collapse(GammaRatioForm(SYMS, tuple(pairs), Fraction(1, math.factorial(n3))),
                                {"xE": 0, "xK": 0}).constant()
    fac = Fraction(1)
    for pr in pairs:
        fac *= pr.offset - 1  # offset = q + <S> + 1
    return Fraction(coeff), fac, zlg, theta, label


def _coupling(side: Side, n3: int, ns: int) -> tuple[int, int]:
    """(m, M0) of the residue matched with n3 plain and ns sigma insertions."""
    return 2 * n3 + 1, ns


@dataclass(frozen=True)
class Column:
    label: str
    values: tuple  # mpc per power of D/z
    powers: tuple
    twisted: bool


def lg_column(spec: OrbifoldSpec, side_name: str, n3: int, ns: int, prec: int = DEFAULT_PREC):
    """U column read off from one index; None on a broad output."""
    side = _side(side_name)
    coeff, fac, zlg, theta, label = _lg_value(spec, side_name, n3, ns)
    if not all(theta):
        return None
    m, M0 = _coupling(side, n3, ns)
    twisted = frac(Fraction(M0, 2)) != 0
    # D_E 1_sigma = 0 and D_K^2 1_sigma = 0
    order = side.order - (1 if twisted else 0)
    with mpmath.workprec(prec):
        ser = residue_series(side, M0, m, order)
        v = to_mp(coeff * fac * KAPPA ** n3) * mpmath.mpc(SIGMA_PHASE) ** ns
        vals = tuple(c / v for c in ser)
    zgw = M0 // 2
    pw = tuple(zgw - zlg - j for j in range(order + 1))
    return Column(label, vals, pw, twisted)


def _exact_ratio(side: Side, M0: int, m: int, M0r: int, mr: int) -> Fraction:
    """Rational ratio of the Gamma parts of residue_constant at (M0, m) and (M0r, mr)."""
    u, ur = residue_point(side, M0, m), residue_point(side, M0r, mr)
    out = Fraction((-1) ** (m - mr)) * Fraction(math.factorial(mr - 1), math.factorial(m - 1))

    def ratio(a: Fraction, b: Fraction) -> Fraction:
        # 1/Gamma(a) divided by 1/Gamma(b) = Gamma(b)/Gamma(a), a - b integral
        n = a - b
        assert n.denominator == 1
        n = int(n)
        r = Fraction(1)
        if n >= 0:
            for j in range(n):
                r /= b + j
        else:
            for j in range(-n):
                r *= a + j
        return r

    out *= ratio(1 - Fraction(m, 2), 1 - Fraction(mr, 2))
    out *= ratio(1 + u, 1 + ur) ** side.r
    return out


def _continued_columns(spec: OrbifoldSpec, side_name: str, n3_max: int, ns_max: int, prec: int):
    cols: dict = {}
    for ns in range(ns_max + 1):
        for n3 in range(n3_max + 1):
            c = lg_column(spec, side_name, n3, ns, prec)
            if c is not None:
                cols.setdefault(c.label, []).append(((n3, ns), c))
    return cols


def _compare_family(side: Side, spec: OrbifoldSpec, fam: list, tol, mism: list) -> mpmath.mpf:
    (n3r, nsr), ref = fam[0]
    dev = mpmath.mpf(0)
    cref, facr, _, _, _ = _lg_value(spec, side.name, n3r, nsr)
    mr, M0r = _coupling(side, n3r, nsr)
    for (n3, ns), col in fam:
        if col.powers != ref.powers:
            mism.append(((n3, ns), "z powers differ"))
            continue
        m, M0 = _coupling(side, n3, ns)
        if (m % 2) == 0:
            continue
        # rational part: Gamma residues against LG coefficient, both relative to the reference
        cg, fac, _, _, _ = _lg_value(spec, side.name, n3, ns)
        lhs = _exact_ratio(side, M0, m, M0r, mr)
        phase = Fraction((-1) ** ((ns - nsr) // 2)) if (ns - nsr) % 2 == 0 else None
        if phase is None:
            mism.append(((n3, ns), "sigma parity"))
            continue
        rhs = (cg * fac) / (cref * facr) * KAPPA ** (n3 - n3r) * phase
        if lhs != rhs:
            mism.append(((n3, ns), f"rational part {lhs} != {rhs}"))
        for a, b in zip(col.values, ref.values):
            dev = max(dev, abs(a - b))
    return dev


@dataclass
class IdentificationReport:
    side: str
    passed: bool
    max_deviation: object
    checked: int
    columns: dict
    mismatches: list
    metadata: dict = field(default_factory=dict)


def identify_continued_series(side: str, spec: OrbifoldSpec, n_max: int = 9, c_max: int = 2,
                              prec: int = DEFAULT_PREC, tol=None,
                              strict: bool = False) -> IdentificationReport:
    """Match continued GW residue sums against LG coefficients index by index.

    Residue indices m = 2 n3 + 1 <= n_max and 2c <= 2 c_max.  Within every LG
    output sector the exact rational Gamma parts must agree and the remaining
    transcendental factor (the U column) must be the same to tol.  With
    strict=True the first mismatch raises MismatchAt.
    """
    require(side, spec)
    rep = _identify(side, spec, n_max, c_max, prec, tol)
    if strict and not rep.passed:
        first = rep.mismatches[0] if rep.mismatches else None
        raise MismatchAt(first, f"max deviation {mpmath.nstr(rep.max_deviation, 5)}")
    return rep


def _identify(side, spec, n_max, c_max, prec, tol) -> IdentificationReport:
    # default: three quarters of the working precision
    tol = tol if tol is not None else mpmath.mpf(2) ** -(3 * prec // 4)
    n3_max = (n_max - 1) // 2
    ns_max = 2 * c_max
    with mpmath.workprec(prec):
        if side == "both":
            return _identify_both(spec, n3_max, ns_max, prec, tol)
        s = _side(side)
        cols = _continued_columns(spec, side, n3_max, ns_max, prec)
        mism: list = []
        dev = mpmath.mpf(0)
        checked = 0
        for label, fam in cols.items():
            dev = max(dev, _compare_family(s, spec, fam, tol, mism))
            checked += len(fam)
        passed = not mism and dev < tol
        meta = {"kappa": str(KAPPA), "sigma_phase": "i", "m": "2 n3 + 1",
                "variables": f"t3 = kappa qt^(-1/{s.w0}), t_sigma = i qt^(-1/{2 * s.w0})"}
        return IdentificationReport(side, passed, dev, checked,
                                    {k: v[0][1] for k, v in cols.items()}, mism, meta)


def _kron_column(ce: Column, ck: Column) -> tuple[tuple, tuple]:
    vals, pws = [], []
    for a, pa in zip(ce.values, ce.powers):
        for b, pb in zip(ck.values, ck.powers):
            vals.append(a * b)
            pws.append(pa + pb)
    return tuple(vals), tuple(pws)


def _identify_both(spec: OrbifoldSpec, n3_max: int, ns_max: int, prec: int, tol):
    """FJRW (M, N, C) against the product of the E and K residues."""
    dev = mpmath.mpf(0)
    mism: list = []
    checked = 0
    cols: dict = {}
    for C in range(ns_max + 1):
        for M in range(n3_max + 1):
            for N in range(n3_max + 1):
                ce = lg_column(spec, "E", M, C, prec)
                ck = lg_column(spec, "K", N, C, prec)
                t = fjrw_term({"J1^3J2": M, "J1J2^3": N, "σJ1^2J2^2": C}, spec)
                if ce is None or ck is None:
                    if t.sector != "broad":
                        mism.append(((M, N, C), "broad factor but narrow FJRW output"))
                    continue
                # FJRW coefficient = LG_E * LG_K / C!
                cE, facE, zE, _, _ = _lg_value(spec, "E", M, C)
                cK, facK, zK, _, _ = _lg_value(spec, "K", N, C)
                if t.coefficient.constant() * math.factorial(C) != cE * cK:
                    mism.append(((M, N, C), "FJRW coefficient is not the product of its factors"))
                if t.z_exponent != 1 + zE + zK - C:
                    mism.append(((M, N, C), "FJRW z exponent"))
                # GW side: residues times the sigma-ray factor 1/Gamma(2c+1) z^{-2c}
                vals, pws = _kron_column(ce, ck)
                with mpmath.workprec(prec):
                    rE = residue_series(SIDE_E, C, 2 * M + 1, len(ce.values) - 1)
                    rK = residue_series(SIDE_K, C, 2 * N + 1, len(ck.values) - 1)
                    direct = [a * b / mpmath.factorial(C) for a in rE for b in rK]
                    v = to_mp(t.coefficient.constant() * facE * facK * KAPPA ** (M + N)) * \
                        mpmath.mpc(SIGMA_PHASE) ** (2 * C)
                    for a, b in zip(direct, vals):
                        dev = max(dev, abs(a / v - b))
                key = f"{ce.label}|{ck.label}"
                cols.setdefault(key, (vals, pws))
                ref = cols[key]
                if ref[1] != pws:
                    mism.append(((M, N, C), "z powers differ"))
                for a, b in zip(ref[0], vals):
                    dev = max(dev, abs(a - b))
                checked += 1
    passed = not mism and dev < tol
    meta = {"kappa": str(KAPPA), "sigma_phase": "i (per factor)", "m, n": "2M+1, 2N+1"}
    return IdentificationReport("both", passed, dev, checked, cols, mism, meta)


# ---------------------------------------------------------------------------
# assembling U


def _antidiag(n: int) -> list:
    return [[mpmath.mpf(1) if i + j == n - 1 else mpmath.mpf(0) for j in range(n)] for i in range(n)]


def _raw_blocks(spec: OrbifoldSpec, side_name: str, prec: int) -> tuple[list, list]:
    """(untwisted columns, twisted columns) ordered by LG degree."""
    cols = _continued_columns(spec, side_name, 6, 6, prec)
    reps = {k: v[0][1] for k, v in cols.items()}
    untw = sorted((c for c in reps.values() if not c.twisted), key=lambda c: c.powers[0])
    tw = sorted((c for c in reps.values() if c.twisted), key=lambda c: c.powers[0])
    return untw, tw


def _block_from_columns(columns: list, rows: list, exp_sign: int) -> Block:
    n = len(rows)
    coeffs = [[columns[c].values[r] if r < len(columns[c].values) else mpmath.mpc(0)
               for c in range(len(columns))] for r in range(n)]
    powers = [[columns[c].powers[r] if r < len(columns[c].powers) else 0
               for c in range(len(columns))] for r in range(n)]
    labels_in = tuple(f"φ({c.label})" for c in columns)
    return Block(labels_in, tuple(rows), coeffs, powers, _antidiag(len(columns)), _antidiag(n), exp_sign)


def _scale(b: Block, nu) -> Block:
    return replace(b, coeffs=[[nu * v for v in row] for row in b.coeffs])


def _gram_constant(b: Block):
    """lambda with M(-z)^T H M(z) = lambda H_in, read off the top-right entry."""
    g = _gram_series(b)
    k = b.size()
    return g.get(0, [[0] * k for _ in range(k)])[0][k - 1] / b.pair_in[0][k - 1]


def _side_blocks(spec: OrbifoldSpec, side_name: str, prec: int):
    untw, tw = _raw_blocks(spec, side_name, prec)
    D = "D_E" if side_name == "E" else "D_K"
    rows = ["1"] + [f"{D}" if j == 1 else f"{D}^{j}" for j in range(1, len(untw))]
    main = _block_from_columns(untw, rows, 1)
    srows = [f"1_σ{side_name}"] + ([f"{D}·1_σ{side_name}"] if len(tw) > 1 else [])
    sig = _block_from_columns(tw, srows, 1)
    return main, sig


def normalized_side(spec: OrbifoldSpec, side_name: str, prec: int = DEFAULT_PREC) -> dict:
    """Untwisted and sigma blocks of one side, scaled by nu = lambda^{-1/2}."""
    with mpmath.workprec(prec):
        main, sig = _side_blocks(spec, side_name, prec)
        lam = _gram_constant(main)
        nu = 1 / mpmath.sqrt(lam)
        main = _scale(main, nu)
        sig = _scale(sig, nu)
        c_sigma = 1 / _gram_constant(sig)
        sig = replace(sig, pair_out=[[c_sigma * x for x in row] for row in sig.pair_out])
        return {"main": main, "sigma": sig, "lambda": lam, "nu": nu, "sigma_pairing": c_sigma}


def assemble_U(side: str, spec: OrbifoldSpec, prec: int = DEFAULT_PREC) -> BlockMatrix:
    """Normalized U for side E, K or both.

    LG units are rescaled to phi_h / prod_k (q_k + i_k(h)); U is then multiplied by
    nu = lambda^{-1/2}, lambda the symplectic constant of the untwisted block, and the
    sigma-sector target pairing constant is solved for and reported.
    """
    require(side, spec)
    with mpmath.workprec(prec):
        if side == "both":
            return _assemble_both(spec, prec)
        d = normalized_side(spec, side, prec)
        main, sig = d["main"], d["sigma"]
        blocks = []
        others = _other_factor_classes(spec, side)
        for cls in others["untwisted"]:
            blocks.append(replace(main, labels_in=tuple(f"{l}⊗{cls}" for l in main.labels_in),
                                  labels_out=tuple(f"{l}·{cls}" for l in main.labels_out)))
        for cls in others["twisted"]:
            blocks.append(replace(sig, labels_in=tuple(f"{l}⊗{cls}" for l in sig.labels_in),
                                  labels_out=tuple(f"{l}·{cls}" for l in sig.labels_out)))
        meta = {"lambda": d["lambda"], "nu": d["nu"], "sigma_pairing": d["sigma_pairing"],
                "unit_rescaling": "phi_h / prod_k (q_k + i_k(h))", "exp": "e^{+z} on every entry"}
        return BlockMatrix(side, blocks, d["nu"], meta)


def _other_factor_classes(spec: OrbifoldSpec, side: str) -> dict:
    """Ambient classes of the untouched GW factor, split by sigma twist."""
    which = "FJRW-GW" if side == "E" else "GW-FJRW"
    basis = mixed_state_space(spec, which)
    out = {"untwisted": [], "twisted": []}
    for e in basis.entries:
        cls = e.label.split("⊗", 1)[1]
        key = "twisted" if e.data[3] else "untwisted"
        if cls not in out[key]:
            out[key].append(cls)
    return out


def _kron_block(a: Block, b: Block) -> Block:
    ka, kb = a.size(), b.size()
    na, nb = len(a.labels_out), len(b.labels_out)
    coeffs = [[a.coeffs[r // nb][c // kb] * b.coeffs[r % nb][c % kb] for c in range(ka * kb)]
              for r in range(na * nb)]
    powers = [[a.powers[r // nb][c // kb] + b.powers[r % nb][c % kb] for c in range(ka * kb)]
              for r in range(na * nb)]

    def kron(A, B):
        return [[A[r // len(B)][c // len(B[0])] * B[r % len(B)][c % len(B[0])]
                 for c in range(len(A[0]) * len(B[0]))] for r in range(len(A) * len(B))]

    lin = tuple(f"{x}⊗{y}" for x in a.labels_in for y in b.labels_in)
    lout = tuple(f"{x}·{y}" for x in a.labels_out for y in b.labels_out)
    return Block(lin, lout, coeffs, powers, kron(a.pair_in, b.pair_in), kron(a.pair_out, b.pair_out), 0)


def _assemble_both(spec: OrbifoldSpec, prec: int) -> BlockMatrix:
    dE = normalized_side(spec, "E", prec)
    dK = normalized_side(spec, "K", prec)
    main = _kron_block(dE["main"], dK["main"])
    sig = _kron_block(dE["sigma"], dK["sigma"])
    nu = dE["nu"] * dK["nu"]
    meta = {"lambda": dE["lambda"] * dK["lambda"], "nu": nu,
            "sigma_pairing": dE["sigma_pairing"] * dK["sigma_pairing"],
            "composition": "Kronecker product of the E and K blocks",
            "exp": "none: the e^{z} of U_E and U_K come from the mixed unit insertions"}
    return BlockMatrix("both", [main, sig], nu, meta)


def sigma_block_identity(U: BlockMatrix, tol=None) -> dict:
    """Read the 1x1 sigma entry off U_E and check f(z) f*(-z) = 1 symbolically."""
    tol = tol if tol is not None else mpmath.mpf(10) ** -40
    b = [x for x in U.blocks if x.size() == 1][0]
    u = b.coeffs[0][0] * mpmath.sqrt(b.pair_out[0][0] / b.pair_in[0][0])
    re, im = int(mpmath.nint(mpmath.re(u))), int(mpmath.nint(mpmath.im(u)))
    close = abs(u - mpmath.mpc(re, im)) < tol
    z = sympy.Symbol("z")
    unit = sympy.Integer(re) + sympy.I * im
    f = unit * sympy.exp(b.exp_sign * z) * z ** b.powers[0][0]
    fstar = sympy.conjugate(unit) * sympy.exp(-b.exp_sign * z) * (-z) ** b.powers[0][0]
    ident = sympy.simplify(f * fstar - 1) == 0
    return {"entry": u, "unit": str(unit), "f": str(f), "numeric_match": bool(close),
            "identity": bool(ident), "passed": bool(close and ident)}


# ---------------------------------------------------------------------------
# Barnes contour


@dataclass(frozen=True)
class ContourSpec:
    variable: str = "s_E"
    real_part: Fraction = Fraction(0)
    detour_radius: Fraction = DETOUR
    height: float | None = None  # default from the tail bound
    step: float = 1.0


@dataclass
class ContourReport:
    gw_sum: object
    residue_sum: object
    integral: object
    deviations: dict
    tails: dict
    passed: bool = False


def _log_qt(qt):
    """log of qt on the branch arg = pi; a real positive input is read as |qt|."""
    qt = mpmath.mpmathify(qt)
    if mpmath.im(qt) == 0 and mpmath.re(qt) > 0:
        return mpmath.log(qt) + 1j * mpmath.pi
    return mpmath.log(qt)


def _R(side: Side, M0: int, s):
    return mpmath.gamma(2 * side.w0 * s + M0 + 1) * mpmath.rgamma(side.w0 * s + mpmath.mpf(M0) / 2 + 1) \
        * mpmath.rgamma(s + 1) ** side.r


def gw_partial_sum(side: Side, M0: int, qt, terms: int, scale=1):
    """sum_{a < terms} qt^a R(a) on the scalar slice, with a tail estimate."""
    L = _log_qt(qt)
    tot = mpmath.mpc(0)
    last = prev = mpmath.mpf(0)
    for a in range(terms):
        t = scale * mpmath.exp(a * L) * _R(side, M0, a)
        tot += t
        prev, last = last, abs(t)
    ratio = last / prev if prev else mpmath.mpf(1)
    tail = last * ratio / (1 - ratio) if ratio < 1 else mpmath.inf
    return tot, tail


def residue_sum(side: Side, M0: int, qt, terms: int, scale=1):
    """sum_m rho_m(0) qt^{-(M0+m)/(2 w0)} with a tail estimate from the last odd terms."""
    L = _log_qt(qt)
    tot = mpmath.mpc(0)
    mags = []
    for m in range(1, terms + 1):
        c = residue_constant(side, M0, m)
        if c == 0:
            continue
        u = to_mp(residue_point(side, M0, m))
        t = scale * c * kernel_factor(side, M0, m, 0)[0] * mpmath.exp(u * L)
        tot += t
        mags.append(abs(t))
    nz = [x for x in mags if x != 0]
    if len(nz) >= 2:
        ratio = nz[-1] / nz[-2]
        tail = nz[-1] * ratio / (1 - ratio) if ratio < 1 else mpmath.inf
    else:
        tail = mpmath.mpf(0)
    return tot, tail


def contour_integral(side: Side, M0: int, qt, cspec: ContourSpec, tol, scale=1):
    """(1/(e^{2 pi i s}-1)) qt^s R(s) integrated from +i infinity to -i infinity.

    The line Re s = real_part detours left around s = 0 on a half circle of the
    given radius; the height is chosen so that the exponential tail e^{-pi |y|}
    of the integrand is below tol/10.
    """
    L = _log_qt(qt)
    x0 = to_mp(cspec.real_part)
    rad = to_mp(cspec.detour_radius)

    def F(s):
        return scale * mpmath.exp(s * L) * _R(side, M0, s) / (mpmath.expjpi(2 * s) - 1)

    amp = max(abs(scale), 1) * max(1, abs(mpmath.exp(x0 * mpmath.re(L))))
    height = cspec.height or float(mpmath.log(amp * 10 / tol) / mpmath.pi) + 8
    step = cspec.step
    total = mpmath.mpc(0)
    # upper ray from i*height down to i*rad, lower ray from -i*rad down to -i*height
    pts = [mpmath.mpf(height)]
    y = mpmath.mpf(height)
    while y - step > rad:
        y -= step
        pts.append(y)
    pts.append(rad)
    for a, b in zip(pts, pts[1:]):
        total += mpmath.quad(lambda t: F(x0 + 1j * t) * 1j, [a, b], method="gauss-legendre")
    total += mpmath.quad(lambda th: F(x0 + rad * mpmath.expj(th)) * 1j * rad * mpmath.expj(th),
                         [mpmath.pi / 2, mpmath.pi, 3 * mpmath.pi / 2], method="gauss-legendre")
    lo = [-p for p in pts[::-1]]
    for a, b in zip(lo, lo[1:]):
        total += mpmath.quad(lambda t: F(x0 + 1j * t) * 1j, [a, b], method="gauss-legendre")
    return total


def barnes_contour_check(cspec: ContourSpec, params: dict, qt, terms: int, spec: OrbifoldSpec,
                         prec: int = DEFAULT_PREC, tol=None, scale=1) -> ContourReport:
    """Integral against the GW sum when |qt| is inside the GW radius, else the residue sum.

    params: {"M0": coupling integer} on the scalar slice D -> 0.
    """
    side_name = "E" if cspec.variable.endswith("E") else "K"
    require(side_name, spec)
    side = _side(side_name)
    tol = tol if tol is not None else mpmath.mpf(10) ** -20
    M0 = int(params.get("M0", 0))
    with mpmath.workprec(prec):
        inside = abs(mpmath.mpmathify(qt)) < to_mp(radius_of_convergence(side_name))
        integral = contour_integral(side, M0, qt, cspec, tol, scale)
        gw, gtail = gw_partial_sum(side, M0, qt, terms, scale) if inside else (None, None)
        rs, rtail = residue_sum(side, M0, qt, terms, scale) if not inside else (None, None)
        devs, tails = {}, {}
        if inside:
            devs["integral-gw"] = abs(integral - gw)
            tails["gw"] = gtail
        else:
            devs["integral-residue"] = abs(integral - rs)
            tails["residue"] = rtail
        if any(t > tol for t in tails.values()):
            raise NonConvergent(f"tail estimate {tails} exceeds {tol}")
        passed = all(d < tol for d in devs.values())
        return ContourReport(gw, rs, integral, devs, tails, passed)


def radius_of_convergence(side: str) -> Fraction:
    """Ratio-test radius of the a-sum, w0^w0 / (2 w0)^{2 w0}: 4^-3 on E, 12^-3 on K."""
    s = _side(side)
    return Fraction(s.w0 ** s.w0, (2 * s.w0) ** (2 * s.w0))
