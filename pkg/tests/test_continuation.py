from fractions import Fraction as F

import mpmath
import pytest

from bvlgcy.continuation import (SIDE_E, SIDE_K, Block, BlockMatrix, ContourSpec, DimensionMismatch,
                                 MismatchAt, assemble_U, barnes_contour_check, check_symplectic,
                                 contour_integral, identify_continued_series, kernel_factor, perturb,
                                 radius_of_convergence, residue_constant, residue_expand_E,
                                 residue_expand_K, sigma_block_identity, taylor_closed_forms,
                                 taylor_table)
from bvlgcy.iseries import UnsupportedCurve, UnsupportedHypotheses
from bvlgcy.weights import OrbifoldSpec

TOL = mpmath.mpf(10) ** -40


def test_require():
    with pytest.raises(UnsupportedCurve):
        assemble_U("E", OrbifoldSpec("cubic-sextic", (3, 1, 1, 1)))
    with pytest.raises(UnsupportedHypotheses):
        assemble_U("K", OrbifoldSpec("quartic", (6, 3, 2, 1)))
    # the E side alone only needs the quartic curve
    assert assemble_U("E", OrbifoldSpec("quartic", (6, 3, 2, 1))).blocks


def test_radii():
    assert radius_of_convergence("E") == F(1, 4 ** 3)
    assert radius_of_convergence("K") == F(1, 12 ** 3)


@pytest.mark.parametrize("side", [SIDE_E, SIDE_K])
def test_residue_constant_oracle(side):
    with mpmath.workprec(256):
        for M0 in range(4):
            for m in range(1, 10):
                u = mpmath.mpf(-(M0 + m)) / (2 * side.w0)
                ref = (-1) ** m * mpmath.rgamma(m) * mpmath.rgamma(1 - mpmath.mpf(m) / 2) \
                    * mpmath.rgamma(1 + u) ** side.r / (2 * side.w0)
                got = residue_constant(side, M0, m)
                if m % 2 == 0:
                    assert got == 0
                assert abs(got - ref) < mpmath.mpf(10) ** -60
                assert abs(residue_constant(side, M0, m, split=True) - got) < mpmath.mpf(10) ** -60


def test_residue_expand_split_agrees(s3111):
    a = residue_expand_E(1, 9, s3111)
    b = residue_expand_E(1, 9, s3111, split=True)
    for x, y in zip(a, b):
        assert x.m == y.m and x.qt_power == F(-(1 + x.m), 4)
        assert all(abs(p - q) < mpmath.mpf(10) ** -60 for p, q in zip(x.coeffs, y.coeffs))
        if x.m % 2 == 0:
            assert all(c == 0 for c in x.coeffs)
    k = residue_expand_K(0, 5, s3111)
    assert [t.qt_power for t in k] == [F(-m, 6) for m in range(1, 6)]


def test_kernel_factor_class_dependence():
    with mpmath.workprec(128):
        for side in (SIDE_E, SIDE_K):
            period = 2 * side.w0
            for M0 in range(10):
                for m in range(1, 11):
                    if (M0 + m) % period == 0:
                        # integer residue point: the kernel has a pole, the Gamma part vanishes
                        assert residue_constant(side, M0, m) == 0
                        continue
                    ref = kernel_factor(side, 0, (M0 + m - 1) % period + 1, 2)
                    got = kernel_factor(side, M0, m, 2)
                    assert all(abs(a - b) < mpmath.mpf(10) ** -30 for a, b in zip(got, ref))


def test_taylor_table():
    with mpmath.workprec(256):
        for k in (None, mpmath.mpf(3), mpmath.mpc(0.5, 0.25)):
            num, closed = taylor_table(2, k), taylor_closed_forms(2, k)
            for key in ("gamma_1", "rgamma_1", "gamma_half", "geometric"):
                assert all(abs(a - b) < mpmath.mpf(10) ** -60 for a, b in zip(num[key], closed[key]))


def _identity_block(n):
    anti = [[1 if i + j == n - 1 else 0 for j in range(n)] for i in range(n)]
    eye = [[mpmath.mpc(1 if i == j else 0) for j in range(n)] for i in range(n)]
    return Block(tuple(range(n)), tuple(range(n)), eye, [[0] * n for _ in range(n)], anti, anti)


def test_identity_symplectic():
    U = BlockMatrix("test", [_identity_block(2), _identity_block(3)])
    rep = check_symplectic(U, TOL)
    assert rep["passed"] and rep["max_deviation"] == 0
    bad = check_symplectic(perturb(U, 1, 0, 0, mpmath.mpf("1e-3")), TOL)
    assert not bad["passed"] and bad["max_deviation"] >= mpmath.mpf("1e-4")


def test_dimension_mismatch():
    b = _identity_block(2)
    b.coeffs = [row[:1] for row in b.coeffs]
    with pytest.raises(DimensionMismatch):
        check_symplectic(BlockMatrix("test", [b]), TOL)


def test_inventory_and_metadata(s3111):
    UE, UK = assemble_U("E", s3111), assemble_U("K", s3111)
    assert UE.inventory() == {"2x2": 3, "1x1": 2}
    assert UK.inventory() == {"3x3": 2, "2x2": 1}
    assert assemble_U("both", s3111).inventory() == {"6x6": 1, "2x2": 1}
    with mpmath.workprec(256):
        assert abs(UE.metadata["lambda"] - mpmath.mpf(1) / 8) < TOL
        assert abs(UK.metadata["lambda"] + mpmath.mpf(1) / 12) < TOL


def test_sigma_identity(s3111):
    rep = sigma_block_identity(assemble_U("E", s3111))
    assert rep["passed"] and rep["unit"] == "1"


def test_identification_strict_mismatch(s3111, monkeypatch):
    import bvlgcy.continuation as cont
    assert identify_continued_series("E", s3111, n_max=5, c_max=1, prec=128).passed
    monkeypatch.setattr(cont, "KAPPA", F(1, 3))
    with pytest.raises(MismatchAt):
        identify_continued_series("E", s3111, n_max=5, c_max=1, prec=128, strict=True)


def test_contour_linearity(s3111):
    with mpmath.workprec(96):
        cs = ContourSpec("s_E")
        tol = mpmath.mpf(10) ** -15
        one = contour_integral(SIDE_E, 0, F(1, 1000), cs, tol)
        two = contour_integral(SIDE_E, 0, F(1, 1000), cs, tol, scale=2)
        assert abs(two - 2 * one) < mpmath.mpf(10) ** -20


@pytest.mark.parametrize("qt", [F(1, 10 ** 4), 10 ** 4])
def test_contour_K_side(s3111, qt):
    rep = barnes_contour_check(ContourSpec("s_K"), {"M0": 0}, qt, 80, s3111, prec=128,
                               tol=mpmath.mpf(10) ** -20)
    assert rep.passed
