from fractions import Fraction as F

import pytest

from bvlgcy.statespace import (DegreeMismatch, MilnorRestriction, NegativeHodgeNumber,
                               fjrw_sector_table, fjrw_state_space, gw_ambient_basis,
                               hodge_diamond, milnor_invariant_dim, mixed_state_space,
                               narrow_sectors, pairing, pairing_matrix)
from bvlgcy.weights import ADMISSIBLE, OrbifoldSpec

from conftest import all_specs


def test_hodge_examples():
    d = hodge_diamond(1, 10)
    assert (d.h11, d.h21) == (6, 60)
    assert (hodge_diamond(0, 0).h11, hodge_diamond(0, 0).h21) == (11, 11)
    assert (hodge_diamond(2, 2).h11, hodge_diamond(2, 2).h21) == (19, 19)
    with pytest.raises(NegativeHodgeNumber):
        hodge_diamond(0, 20)


def test_case_dimensions(s3111):
    rows = {r["sector"]: r["dim"] for r in fjrw_sector_table(s3111)}
    assert rows["id"] == 42 and rows["σ"] == 60 and rows["σJ1^2"] == 20
    assert rows["σJ2^2"] == rows["σJ2^4"] == 3


def test_milnor_unrestricted(s3111):
    r = MilnorRestriction.of(s3111, tuple(range(7)))
    mu = 1
    for q in s3111.charges:
        mu *= (1 / q - 1)
    assert milnor_invariant_dim(r, []) == mu == 1125


def test_fjrw_totals(s3111):
    b = fjrw_state_space(s3111)
    assert len(b.entries) == 136
    assert b.graded_dims == {0: 1, 2: 6, 3: 122, 4: 6, 6: 1}


NARROW_3111 = ["J1J2", "J1J2^3", "J1^3J2", "σJ1^2J2^2", "J1J2^5", "J1^3J2^3", "σJ1^2J2^4", "J1^3J2^5"]


def test_narrow_degree_distribution():
    for w in ADMISSIBLE:
        ns = narrow_sectors(OrbifoldSpec("quartic", w))
        degs = [n.deg_W for n in ns]
        assert degs.count(0) == 1 and degs.count(6) == 1
        assert degs.count(2) == degs.count(4)
        assert [n.label for n in ns if n.deg_W == 0] == ["J1J2"]


def test_ambient_basis(s3111, s5221):
    assert gw_ambient_basis(s3111).graded_dims == {0: 1, 2: 3, 4: 3, 6: 1}
    assert gw_ambient_basis(s5221).graded_dims[2] == 5
    for w in ADMISSIBLE:
        s = OrbifoldSpec("quartic", w)
        assert gw_ambient_basis(s).graded_dims[2] <= hodge_diamond(*s.nikulin).h11


def test_mixed_degree_two(s3111):
    fg = {e.label for e in mixed_state_space(s3111, "FJRW-GW").entries if e.degree == 2}
    assert fg == {"φ(J1^3)⊗1_0", "φ(σJ1^2)⊗1_σK", "φ(J1)⊗D_K·1_0"}
    gf = {e.label for e in mixed_state_space(s3111, "GW-FJRW").entries if e.degree == 2}
    assert gf == {"φ(J2^3)⊗1_0", "φ(J2)⊗D_E·1_0", "φ(σJ2^2)⊗1_σE"}


@pytest.mark.parametrize("spec", all_specs()[:6], ids=lambda s: s.label)
def test_pairing_is_perfect(spec):
    for basis in (gw_ambient_basis(spec), fjrw_state_space(spec, narrow_only=True),
                  mixed_state_space(spec, "FJRW-GW"), mixed_state_space(spec, "GW-FJRW")):
        M = pairing_matrix(basis)
        n = len(M)
        # a permutation matrix of nonzero scalars
        for i in range(n):
            assert sum(1 for x in M[i] if x) == 1
            assert sum(1 for r in range(n) if M[r][i]) == 1


def test_pairing_examples(s3111):
    b = gw_ambient_basis(s3111)
    top = [e for e in b.entries if e.degree == 6][0]
    assert pairing(b, b.entries[0], top) == 1
    sig = [e for e in b.entries if e.label == "1_σ"][0]
    partners = [e for e in b.entries if e.degree == 4 and pairing(b, sig, e)]
    assert len(partners) == 1
    with pytest.raises(DegreeMismatch):
        pairing(b, b.entries[0], b.entries[0])
    d2 = [e for e in b.entries if e.degree == 2]
    assert all(pairing(b, d2[0], e) == 0 for e in b.entries if e.degree == 4 and e not in partners
               and pairing(b, d2[0], e) == 0)


def test_degree_of_mixed_entries(s3111):
    for which in ("FJRW-GW", "GW-FJRW"):
        for e in mixed_state_space(s3111, which).entries:
            assert e.degree in (0, 2, 4, 6)
            assert isinstance(e.degree, (int, F))
