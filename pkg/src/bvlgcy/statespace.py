"""State spaces of the four phases: Chen-Ruan ambient part (GW), FJRW and the
two mixed compact-type spaces, with gradings and pairings."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import prod

from .arith import frac
from .weights import (E_IDX, K_IDX, VARS, J1, J2, GroupElement, OrbifoldSpec, build_group,
                      sector_info, sigma, word_label)

HALF = Fraction(1, 2)


class NegativeHodgeNumber(ValueError):
    pass


class DegenerateRestriction(ValueError):
    pass


class DegreeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class HodgeDiamond:
    h00: int
    h11: int
    h21: int
    h30: int

    @property
    def rows(self) -> list[list[int]]:
        return [[self.h00], [0, 0], [0, self.h11, 0], [self.h30, self.h21, self.h21, self.h30],
                [0, self.h11, 0], [0, 0], [self.h00]]

    @property
    def graded_dims(self) -> dict[int, int]:
        return {0: self.h00, 2: self.h11, 3: 2 * self.h30 + 2 * self.h21, 4: self.h11, 6: self.h00}

    def as_dict(self) -> dict:
        return {"h00": self.h00, "h11": self.h11, "h21": self.h21, "h30": self.h30}


def hodge_diamond(N: int, Np: int) -> HodgeDiamond:
    h11 = 11 + 5 * N - Np
    h21 = 11 + 5 * Np - N
    if N < 0 or Np < 0 or h11 < 0 or h21 < 0:
        raise NegativeHodgeNumber(f"(N, N')=({N}, {Np}) gives h11={h11}, h21={h21}")
    return HodgeDiamond(1, h11, h21, 1)


def diamond_from_dims(dims: dict) -> HodgeDiamond:
    d3 = dims.get(3, 0)
    return HodgeDiamond(dims.get(0, 0), dims.get(2, 0), (d3 - 2) // 2, 1 if d3 else 0)


@dataclass(frozen=True)
class BasisEntry:
    label: str
    degree: Fraction
    sector: str
    flag: str  # "narrow" | "broad" | "ambient" | "mixed"
    data: tuple = ()


@dataclass
class GradedBasis:
    theory: str
    spec: OrbifoldSpec
    entries: list
    pairing_data: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def graded_dims(self) -> dict:
        c = Counter(e.degree for e in self.entries)
        return {int(k) if Fraction(k).denominator == 1 else k: v for k, v in sorted(c.items())}

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def index(self, label: str) -> int:
        return self.labels.index(label)


# ---------------------------------------------------------------------------
# Milnor rings


@dataclass(frozen=True)
class MilnorRestriction:
    variables: tuple  # indices into VARS
    exponents: tuple

    @classmethod
    def of(cls, spec: OrbifoldSpec, fixed) -> "MilnorRestriction":
        return cls(tuple(fixed), tuple(spec.exponents[i] for i in fixed))

    def describe(self) -> str:
        return "+".join(f"{VARS[i]}^{a}" for i, a in zip(self.variables, self.exponents)) or "0"


def milnor_monomials(r: MilnorRestriction, group) -> list[tuple]:
    """Exponent vectors m of G-invariant m*dvol in the Milnor ring of a Fermat restriction."""
    if any(a < 2 for a in r.exponents):
        raise DegenerateRestriction(r.describe())
    out = []
    for m in product(*(range(a - 1) for a in r.exponents)):
        ok = True
        for g in group:
            s = sum((mk + 1) * g.theta[i] for mk, i in zip(m, r.variables))
            if Fraction(s).denominator != 1:
                ok = False
                break
        if ok:
            out.append(m)
    return out


def milnor_invariant_dim(r: MilnorRestriction, group) -> int:
    return len(milnor_monomials(r, group))


# ---------------------------------------------------------------------------
# FJRW


def generators(spec: OrbifoldSpec) -> list[GroupElement]:
    return [J1(spec), J2(spec), sigma()]


def fjrw_state_space(spec: OrbifoldSpec, narrow_only: bool = False) -> GradedBasis:
    G = build_group(spec)
    gens = generators(spec)
    entries = []
    for h in G.elements:
        info = sector_info(h, spec)
        if info.narrow:
            entries.append(BasisEntry(f"φ({info.label})", info.deg_W, info.label, "narrow", (h,)))
        elif not narrow_only:
            r = MilnorRestriction.of(spec, h.fixed)
            for m in milnor_monomials(r, gens):
                mon = "".join(f"{VARS[i]}^{a}" for i, a in zip(r.variables, m) if a) or "1"
                entries.append(BasisEntry(f"φ({info.label};{mon})", info.deg_W, info.label, "broad", (h, m)))
    entries.sort(key=lambda e: (e.degree, e.flag != "narrow", e.label))
    return GradedBasis("fjrw-narrow" if narrow_only else "fjrw", spec, entries)


def fjrw_sector_table(spec: OrbifoldSpec) -> list[dict]:
    """Per-sector dimensions (the case analysis rows)."""
    G = build_group(spec)
    rows = []
    for h in G.elements:
        info = sector_info(h, spec)
        r = MilnorRestriction.of(spec, h.fixed)
        dim = 1 if info.narrow else milnor_invariant_dim(r, generators(spec))
        if dim:
            rows.append({"sector": info.label, "restriction": r.describe(), "dim": dim,
                         "degree": info.deg_W})
    return rows


def narrow_sectors(spec: OrbifoldSpec) -> list:
    G = build_group(spec)
    infos = [sector_info(h, spec) for h in G.elements]
    return sorted((i for i in infos if i.narrow), key=lambda i: (i.deg_W, i.label))


# ---------------------------------------------------------------------------
# Ambient (Chen-Ruan) sectors of the hypersurface in the toric quotient


@dataclass(frozen=True, order=True)
class AmbientSector:
    phases: tuple  # 7 fractional phases; the sector's torus element
    tau: Fraction  # sigma component, 0 or 1/2

    @property
    def nE(self) -> int:
        return sum(1 for i in E_IDX if self.phases[i] == 0)

    @property
    def nK(self) -> int:
        return sum(1 for i in K_IDX if self.phases[i] == 0)

    @property
    def age(self) -> Fraction:
        return sum(self.phases, Fraction(0))

    @property
    def age_E(self) -> Fraction:
        return sum((self.phases[i] for i in E_IDX), Fraction(0))

    @property
    def age_K(self) -> Fraction:
        return sum((self.phases[i] for i in K_IDX), Fraction(0))

    @property
    def kind(self) -> str:
        p = self.phases
        if not any(p):
            return "0"
        eK = any(p[i] for i in K_IDX[1:])
        eE = any(p[i] for i in E_IDX[1:])
        if self.tau == 0:
            return "g" if not eE else "gE"
        if not eE and not eK:
            return "σ"
        if eE:
            return "σE'" if not eK else "σE'g"
        return "σg'" if self.nK == 2 else "g~"

    @property
    def label(self) -> str:
        k = self.kind
        if k in ("0", "σ"):
            return f"1_{k}"
        return f"1_{k}[{','.join(str(a) for a in self.phases)}]"

    def inverse(self) -> "AmbientSector":
        return AmbientSector(tuple(frac(-a) for a in self.phases), self.tau)


def _half_phases(weights, top, tau, denom):
    """Phase vectors (top coord gets +tau) of u ranging over (1/denom)Z mod 1."""
    out = set()
    for j in range(denom):
        u = Fraction(j, denom)
        ph = [frac(wi * u) for wi in weights]
        ph[0] = frac(ph[0] + tau)
        out.add(tuple(ph))
    return out


def factor_sectors(spec: OrbifoldSpec, side: str) -> dict:
    """Twisted sectors of one factor with >= 2 fixed coordinates, keyed by tau."""
    w = spec.curve.weights if side == "E" else spec.k3_weights
    denom = 2 * prod(w)
    out = {}
    for tau in (Fraction(0), HALF):
        ph = _half_phases(w, 0, tau, denom)
        out[tau] = sorted(p for p in ph if sum(1 for a in p if a == 0) >= 2)
    return out


def ambient_sectors(spec: OrbifoldSpec) -> list[AmbientSector]:
    fE, fK = factor_sectors(spec, "E"), factor_sectors(spec, "K")
    out = []
    for tau in (Fraction(0), HALF):
        for pe in fE[tau]:
            for pk in fK[tau]:
                out.append(AmbientSector(pe + pk, tau))
    return sorted(out, key=lambda s: (s.age, s.label))


def _cls(e: int, k: int) -> str:
    parts = []
    if e:
        parts.append("D_E" if e == 1 else f"D_E^{e}")
    if k:
        parts.append("D_K" if k == 1 else f"D_K^{k}")
    return "·".join(parts)


def gw_ambient_basis(spec: OrbifoldSpec) -> GradedBasis:
    entries = []
    for s in ambient_sectors(spec):
        for e in range(s.nE - 1):
            for k in range(s.nK - 1):
                c = _cls(e, k)
                lab = (c + "·" if c else "") + s.label
                deg = 2 * s.age + 2 * (e + k)
                entries.append(BasisEntry(lab, deg, s.label, "ambient", (s, e, k)))
    entries.sort(key=lambda x: (x.degree, x.label))
    return GradedBasis("gw", spec, entries, metadata={"sigma_pairing_normalization": "1/1"})


# ---------------------------------------------------------------------------
# mixed spaces


def factor_narrow(spec: OrbifoldSpec, side: str) -> list[dict]:
    """Narrow elements of <J, sigma> acting on one factor, with their factor degree."""
    idx = E_IDX if side == "E" else K_IDX
    q = [spec.charges[i] for i in idx]
    order = max(spec.curve.exponents) if side == "E" else spec.d
    seen = {}
    for t in (0, 1):
        for r in range(order):
            th = [frac(r * qi) for qi in q]
            th[0] = frac(th[0] + Fraction(t, 2))
            th = tuple(th)
            if all(th) and th not in seen:
                name = word_label(t, r if side == "E" else 0, r if side == "K" else 0)
                age = sum(th, Fraction(0))
                i_vals = tuple(frac(a - qi) for a, qi in zip(th, q))
                seen[th] = {"theta": th, "tau": Fraction(t, 2), "label": name,
                            "degree": 2 * (age - 1), "i": i_vals}
    return sorted(seen.values(), key=lambda d: (d["degree"], d["label"]))


def mixed_state_space(spec: OrbifoldSpec, which: str) -> GradedBasis:
    """which: 'FJRW-GW' (LG on the curve) or 'GW-FJRW' (LG on the K3)."""
    which = which.upper()
    if which not in ("FJRW-GW", "GW-FJRW"):
        raise ValueError(which)
    lg_side, gw_side = ("E", "K") if which == "FJRW-GW" else ("K", "E")
    narrow = factor_narrow(spec, lg_side)
    gws = factor_sectors(spec, gw_side)
    entries = []
    for n in narrow:
        for ph in gws[n["tau"]]:
            nfix = sum(1 for a in ph if a == 0)
            age = sum(ph, Fraction(0))
            if not any(ph):
                sec = "1_0"
            elif n["tau"] and all(a == 0 for a in ph[1:]):
                sec = f"1_σ{gw_side}"
            else:
                sec = f"1_{gw_side}[{','.join(map(str, ph))}]"
            for l in range(nfix - 1):
                c = _cls(l, 0) if gw_side == "E" else _cls(0, l)
                lab = f"φ({n['label']})⊗" + (c + "·" if c else "") + sec
                deg = n["degree"] + 2 * age + 2 * l
                entries.append(BasisEntry(lab, deg, f"{n['label']}|{sec}", "mixed",
                                          (n["theta"], ph, l, n["tau"])))
    entries.sort(key=lambda x: (x.degree, x.label))
    return GradedBasis(which, spec, entries)


# ---------------------------------------------------------------------------
# pairing


def _partner(basis: GradedBasis, e: BasisEntry):
    if basis.theory == "gw":
        s, a, k = e.data
        return ("gw", s.inverse(), s.nE - 2 - a, s.nK - 2 - k)
    if basis.theory.startswith("fjrw"):
        if e.flag != "narrow":
            return None
        return ("fjrw", e.data[0].inverse())
    th, ph, l, tau = e.data
    nfix = sum(1 for a in ph if a == 0)
    return ("mixed", tuple(frac(-a) for a in th), tuple(frac(-a) for a in ph), nfix - 2 - l)


def _key(basis: GradedBasis, e: BasisEntry):
    if basis.theory == "gw":
        s, a, k = e.data
        return ("gw", s, a, k)
    if basis.theory.startswith("fjrw"):
        return ("fjrw", e.data[0]) if e.flag == "narrow" else None
    th, ph, l, tau = e.data
    return ("mixed", th, ph, l)


def pairing(basis: GradedBasis, x: BasisEntry | str, y: BasisEntry | str) -> Fraction:
    if isinstance(x, str):
        x = basis.entries[basis.index(x)]
    if isinstance(y, str):
        y = basis.entries[basis.index(y)]
    if x.degree + y.degree != 6:
        raise DegreeMismatch(f"{x.label} ({x.degree}) and {y.label} ({y.degree})")
    p = _partner(basis, x)
    return Fraction(1) if p is not None and p == _key(basis, y) else Fraction(0)


def pairing_matrix(basis: GradedBasis) -> list[list[Fraction]]:
    n = len(basis.entries)
    M = [[Fraction(0)] * n for _ in range(n)]
    for i, x in enumerate(basis.entries):
        for j, y in enumerate(basis.entries):
            if x.degree + y.degree == 6:
                M[i][j] = pairing(basis, x, y)
    return M


def full_gw_dims(spec: OrbifoldSpec) -> dict:
    return hodge_diamond(*spec.nikulin).graded_dims


def isomorphism_report(spec: OrbifoldSpec) -> dict:
    fj = fjrw_state_space(spec).graded_dims
    full = {k: v for k, v in full_gw_dims(spec).items() if v}
    nar = fjrw_state_space(spec, narrow_only=True).graded_dims
    amb = gw_ambient_basis(spec).graded_dims
    fg = mixed_state_space(spec, "FJRW-GW").graded_dims
    gf = mixed_state_space(spec, "GW-FJRW").graded_dims
    ok = fj == full and nar == amb == fg == gf
    return {"spec": spec.label, "passed": ok, "fjrw": fj, "gw_full": full, "narrow": nar,
            "ambient": amb, "mixed_fg": fg, "mixed_gf": gf}
