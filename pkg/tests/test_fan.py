from fractions import Fraction as F

import pytest

from bvlgcy.fan import (LatticePoint, NotInLambdaS, build_fan, enumerate_box, enumerate_lambda_E,
                        enumerate_points, in_lambda_S, lambda_vector, mori_contains, valuation)
from bvlgcy.statespace import gw_ambient_basis
from bvlgcy.weights import ADMISSIBLE, OrbifoldSpec


def test_weight_matrix(s3111):
    fan = build_fan(s3111)
    assert fan.weight_matrix[1] == (0, 0, 0, 3, 1, 1, 1, 0)
    assert fan.weight_matrix[0] == (2, 1, 1, 0, 0, 0, 0, 0)
    assert fan.weight_matrix[2] == (1, 0, 0, 1, 0, 0, 0, 2)


@pytest.mark.parametrize("w", list(ADMISSIBLE))
def test_gale_duality(w):
    fan = build_fan(OrbifoldSpec("quartic", w))
    assert all(x == 0 for row in fan.gale_product() for x in row)


def test_box_3111(s3111):
    box = enumerate_box(s3111)
    assert [b.label for b in box] == ["1_0", "1_σ"]
    sig = box[1]
    assert sig.phases == (F(1, 2), 0, 0, F(1, 2), 0, 0, 0)
    assert build_fan(s3111).m == 0


@pytest.mark.parametrize("w", list(ADMISSIBLE))
def test_box_matches_ambient_sectors(w):
    s = OrbifoldSpec("quartic", w)
    sectors = {e.sector for e in gw_ambient_basis(s).entries}
    assert {b.label for b in enumerate_box(s)} == sectors


def test_box_count_6321():
    s = OrbifoldSpec("quartic", (6, 3, 2, 1))
    box = enumerate_box(s)
    twisted = {e.sector for e in gw_ambient_basis(s).entries} - {"1_0"}
    assert len(box) == 1 + len(twisted) == 5


def test_mori(s3111):
    assert mori_contains((1, 0, 0), s3111)
    assert mori_contains((F(-1, 2), F(-1, 3), 1), s3111)
    assert not mori_contains((-1, 0, 1), s3111)


def test_valuation(s3111):
    fan = build_fan(s3111)
    assert valuation(LatticePoint(F(1), F(1), F(0)), fan).label == "1_0"
    assert valuation(LatticePoint(F(0), F(0), F(1, 2)), fan).label == "1_σ"
    with pytest.raises(NotInLambdaS):
        valuation(LatticePoint(F(1, 3), F(0), F(0)), fan)


def test_valuation_shift_invariance(s3111):
    fan = build_fan(s3111)
    for p in enumerate_points(fan, 2).get(enumerate_box(s3111)[1], []):
        q = LatticePoint(p.a + 1, p.b + 2, p.c + 1, p.k)
        assert valuation(q, fan) == valuation(p, fan)


def test_lambda_E_examples(s3111):
    fan = build_fan(s3111)
    box = enumerate_box(s3111)
    assert enumerate_lambda_E(fan, box[0], 0) == [LatticePoint(F(0), F(0), F(0))]
    sig = enumerate_lambda_E(fan, box[1], 1)
    assert LatticePoint(F(0), F(0), F(1, 2)) in sig
    counts = [sum(len(v) for v in enumerate_points(fan, d).values()) for d in range(4)]
    assert counts == sorted(counts) and counts[0] == 1


def test_lambda_E_brute_force(s3111):
    """Scan an (a, b, c) grid against the inequalities and the valuation."""
    fan = build_fan(s3111)
    bound = 2
    found = {p for pts in enumerate_points(fan, bound).values() for p in pts}
    brute = set()
    # a + b + c >= c/6 on the Mori cone, so c <= 6 bound, a >= -3 bound, b >= -2 bound
    for c2 in range(0, 12 * bound + 1):
        c = F(c2, 2)
        for a4 in range(-12 * bound, 12 * bound + 1):
            a = F(a4, 4)
            for b6 in range(-12 * bound, 24 * bound + 1):
                b = F(b6, 6)
                p = LatticePoint(a, b, c)
                if p.degree() > bound or not mori_contains((a, b, c), s3111):
                    continue
                if not in_lambda_S(p, fan):
                    continue
                lam = lambda_vector(p, fan)
                if lam[7] < 0:
                    continue
                if valuation(p, fan).in_Y:
                    brute.add(p)
    assert found == brute
