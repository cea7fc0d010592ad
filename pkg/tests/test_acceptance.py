"""One pass/fail test per acceptance criterion, at the stated tolerances and time budgets."""
import math
import random
import time
from fractions import Fraction as F

import mpmath
import pytest
import sympy

from bvlgcy.cli import run
from bvlgcy.continuation import (ContourSpec, assemble_U, barnes_contour_check, check_symplectic,
                                 identify_continued_series, perturb, sigma_block_identity)
from bvlgcy.iseries import (direct_product_coefficient, drop_factor, euler_limit,
                            euler_modification_check, fjrw_inputs, fjrw_term, gw_terms,
                            homogeneity_check, mnc_labels, mnc_z_exponent, twist_delta)
from bvlgcy.statespace import (diamond_from_dims, fjrw_sector_table, fjrw_state_space,
                               hodge_diamond, isomorphism_report, narrow_sectors)
from bvlgcy.weights import ADMISSIBLE, InvalidSpec, OrbifoldSpec, build_group, sector_info

from conftest import all_specs

S3111 = OrbifoldSpec("quartic", (3, 1, 1, 1))


def test_c01_hodge_diamonds():
    t = time.perf_counter()
    d = hodge_diamond(1, 10)
    swaps = [(hodge_diamond(N, Np), hodge_diamond(Np, N)) for N, Np in ADMISSIBLE.values()]
    elapsed = time.perf_counter() - t
    assert (d.h11, d.h21) == (6, 60)
    for a, b in swaps:
        assert (a.h11, a.h21) == (b.h21, b.h11)
    assert elapsed < 1e-3


def test_c02_fjrw_tables():
    rows = {r["sector"]: r["dim"] for r in fjrw_sector_table(S3111)}
    assert (rows["id"], rows["σ"], rows["σJ1^2"], rows["σJ2^2"]) == (42, 60, 20, 3)
    assert len(fjrw_state_space(S3111, narrow_only=True).entries) == 8
    expected = {(6, 3, 2, 1): (9, 45), (6, 4, 1, 1): (11, 59), (12, 8, 3, 1): (19, 43)}
    for w, (h11, h21) in expected.items():
        dims = fjrw_state_space(OrbifoldSpec("quartic", w)).graded_dims
        d = diamond_from_dims(dims)
        assert (d.h11, d.h21) == (h11, h21)
        if w == (6, 3, 2, 1):
            assert sum(dims.values()) == 112


NARROW = {
    (3, 1, 1, 1): [("J1J2", 0), ("J1J2^3", 2), ("J1^3J2", 2), ("σJ1^2J2^2", 2),
                   ("J1J2^5", 4), ("J1^3J2^3", 4), ("σJ1^2J2^4", 4), ("J1^3J2^5", 6)],
    (5, 2, 2, 1): [("J1J2", 0), ("J1J2^3", 2), ("J1J2^7", 2), ("J1^3J2", 2), ("σJ1^2J2^2", 2),
                   ("σJ1^2J2^6", 2), ("J1J2^9", 4), ("J1^3J2^3", 4), ("J1^3J2^7", 4),
                   ("σJ1^2J2^4", 4), ("σJ1^2J2^8", 4), ("J1^3J2^9", 6)],
}


@pytest.mark.parametrize("w", list(NARROW))
def test_c03_narrow_counting(w):
    got = [(n.label, n.deg_W) for n in narrow_sectors(OrbifoldSpec("quartic", w))]
    assert got == NARROW[w]


def test_c04_state_space_isomorphisms():
    t = time.perf_counter()
    reports = [isomorphism_report(s) for s in all_specs()]
    elapsed = time.perf_counter() - t
    assert len(reports) == 2 * len(ADMISSIBLE)
    assert all(r["passed"] for r in reports), [r["spec"] for r in reports if not r["passed"]]
    assert elapsed < 10


def test_c05_gw_oracle():
    terms = gw_terms(S3111, 4)
    assert len(terms) > 100
    for t in terms:
        z, coeffs = direct_product_coefficient(_point(t), S3111)
        assert z == t.z_exponent
        assert {e: F(v) for e, v in t.coefficient.c.items()} == coeffs, t.index


def _point(t):
    from bvlgcy.fan import LatticePoint
    a, b, c, k = t.index
    return LatticePoint(F(a), F(b), F(c), tuple(k))


def test_c06_homogeneity():
    assert homogeneity_check(gw_terms(S3111, 4)) == (True, None)


def test_c07_fjrw_structure():
    G = build_group(S3111)
    labs = mnc_labels(S3111)
    iv = [sector_info(G.by_label(l), S3111).i_values for l in labs]
    # two full periods of (M mod 2, N mod 3, C mod 12)
    for M in range(4):
        for N in range(6):
            for C in range(24):
                S = [M * a + N * b + C * c for a, b, c in zip(*iv)]
                brute = 1 - (M + N + C) + sum(math.floor(x) for x in S)
                t = fjrw_term(dict(zip(labs, (M, N, C))), S3111)
                assert t.z_exponent == brute == mnc_z_exponent(M, N, C)
                assert t.z_exponent <= 1
                # z^1 occurs exactly on the unit sector; n = 0 is one such index, (2,0,0) another
                assert (t.z_exponent == 1) == (t.sector == "φ(J1J2)")
    assert fjrw_term(dict(zip(labs, (2, 0, 0))), S3111).z_exponent == 1
    for w in ADMISSIBLE:
        s = OrbifoldSpec("quartic", w)
        lead = fjrw_term({}, s)
        assert lead.z_exponent == 1 and lead.sector == "φ(J1J2)"
        assert lead.coefficient.constant() == math.prod(1 / q for q in s.charges)


def test_c08_delta_operator():
    s = sympy.symbols("s0:7")
    G = build_group(S3111)
    for h in G.elements:
        if not sector_info(h, S3111).narrow:
            continue
        d, dual = twist_delta(h, S3111, 6), twist_delta(h.inverse(), S3111, 6)
        a, b = d.exponent_at(list(s), 1), dual.exponent_at(list(s), -1)
        assert all(sympy.expand(x + y) == 0 for x, y in zip(a, b))
        # Delta_h(z) Delta_{h^-1}(-z) = 1 as a series to z^6 for rational parameters
        sv = [0] + [F(j, 7) for j in range(1, 7)]
        prod = [sum(x * y for x, y in zip(d.series(sv, k)[:k + 1], dual.series(sv, k, -1)[k::-1]))
                for k in range(7)]
        assert prod == [1, 0, 0, 0, 0, 0, 0]
    rng = random.Random(2024)
    ins = fjrw_inputs(S3111)
    worst = mpmath.mpf(0)
    for _ in range(20):
        n = [rng.randint(0, 6) for _ in ins]
        S = [sum(m * i.i_values[k] for m, i in zip(n, ins)) for k in range(7)]
        lhs, rhs = euler_limit(S3111.charges, S)
        assert lhs == rhs
        lam = F(1, 10 ** 6)
        with mpmath.workprec(256):
            l, r = euler_modification_check(S3111.charges, S, lam, lam / 100, terms=40, prec=256)
            worst = max(worst, abs(l - r) / abs(r))
    assert worst < mpmath.mpf(10) ** -40


def test_c09_symplecticity():
    t = time.perf_counter()
    tol = mpmath.mpf(10) ** -40
    for side in ("E", "K", "both"):
        U = assemble_U(side, S3111, 256)
        rep = check_symplectic(U, tol, 256)
        assert rep["passed"], (side, rep["max_deviation"])
        assert all(b["deviation"] < tol for b in rep["blocks"])
    sig = sigma_block_identity(assemble_U("E", S3111, 256))
    assert sig["identity"] and sig["numeric_match"]
    assert time.perf_counter() - t < 5


def test_c10_identification():
    t = time.perf_counter()
    for side in ("E", "K", "both"):
        rep = identify_continued_series(side, S3111, n_max=9, c_max=2, prec=256,
                                        tol=mpmath.mpf(10) ** -40)
        assert rep.passed and not rep.mismatches, (side, rep.mismatches[:3])
        assert rep.max_deviation < mpmath.mpf(10) ** -40
    assert time.perf_counter() - t < 60


@pytest.mark.parametrize("qt,key", [(F(1, 1000), "integral-gw"), (1000, "integral-residue")])
def test_c11_barnes_contour(qt, key):
    t = time.perf_counter()
    tol = mpmath.mpf(10) ** -20
    rep = barnes_contour_check(ContourSpec("s_E"), {"M0": 0}, qt, 80, S3111, prec=256, tol=tol)
    assert rep.passed and rep.deviations[key] < tol
    assert all(v < tol for v in rep.tails.values())
    assert time.perf_counter() - t < 120


def test_c12_negative_controls(tmp_path):
    # perturbed block entry
    tol = mpmath.mpf(10) ** -40
    U = assemble_U("E", S3111)
    bad = check_symplectic(perturb(U, 0, 0, 1, mpmath.mpf("1e-3")), tol)
    assert not bad["passed"] and bad["max_deviation"] >= mpmath.mpf("1e-4")
    code, _ = run(["verify", "--check", "symplectic", "--tol", "0"])
    assert code == 3
    # dropped Gamma factor
    t = next(t for t in gw_terms(S3111, 2) if t.index[0] == 1 and t.index[2] == 0)
    broken = drop_factor(t, 1)
    assert homogeneity_check([broken])[0] is False
    _, coeffs = direct_product_coefficient(_point(t), S3111)
    assert {e: F(v) for e, v in broken.coefficient.c.items()} != coeffs
    # off-table weights
    with pytest.raises(InvalidSpec):
        OrbifoldSpec("quartic", (4, 1, 1, 1))
    assert run(["state-space", "--k3", "4,1,1,1"])[0] == 2
