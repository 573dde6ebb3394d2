import math

import numpy as np
import pytest

from endpoint_lab.grid import Grid
from endpoint_lab.littlewood_paley import build_partition, psi0
from endpoint_lab.symbols import (ClassParams, OscillatorySymbol, check_symbol_class, identity_symbol,
                                  multiplier_symbol, reference_symbol, symbol_A, symbol_B, symbol_C,
                                  symbol_C_blocks)

GB = Grid(2 * np.pi, 2 ** 15)     # bandwidth 8192: symbol B up to j = 12
GC = Grid(np.pi, 2 ** 14)         # bandwidth 8192: symbol C up to j = 10


@pytest.fixture(scope="module")
def B():
    return symbol_B(GB, build_partition(GB))


@pytest.fixture(scope="module")
def C():
    return symbol_C(2.0, GC, build_partition(GC))


def test_class_params_validation():
    with pytest.raises(ValueError):
        ClassParams(0, 1.5, 0)
    with pytest.raises(ValueError):
        ClassParams(0, 0.5, -0.1)
    assert ClassParams(-1, 1, 0).as_tuple() == (-1, 1, 0)


def test_identity_and_reference():
    x = np.linspace(-3, 3, 7)
    assert np.all(identity_symbol()(x, 5 * x) == 1)
    assert np.allclose(reference_symbol(0)(x, 10 * x), 1)
    assert reference_symbol(-1)(0.3, math.sqrt(3)) == pytest.approx(0.5)
    assert reference_symbol(-1).declared.as_tuple() == (-1, 1, 0)
    assert reference_symbol(2).x_independent


def test_nonfinite_values_rejected():
    bad = multiplier_symbol(lambda xi: 1 / (xi - xi), ClassParams(0, 1, 0))
    with np.errstate(divide="ignore", invalid="ignore"), pytest.raises(ValueError):
        bad(0.0, 1.0)


def direct_B(x, xi, j_max):
    out = np.zeros(np.broadcast(x, xi).shape, dtype=complex)
    for j in range(2, j_max + 1):
        out += np.exp(-1j * 2.0 ** j * x) * psi0(2.0 ** (1 - j) * (xi - 2.0 ** j))
    return out


def direct_C(x, xi, p, j_max):
    out = np.zeros(np.broadcast(x, xi).shape, dtype=complex)
    for j in range(2, j_max + 1):
        for k in range(-2 * 2 ** j, 2 * 2 ** j + 1):
            if 7 * 2 ** j / 8 < abs(k) < 9 * 2 ** j / 8:
                out += 2.0 ** (-j / p) * np.exp(-4j * k * x) * psi0((xi - 4 * k) / 4)
    return out


def test_B_declared_and_plateau(B):
    assert B.declared.as_tuple() == (0, 1, 1)
    assert B.j_max == 12
    x = np.linspace(-2, 2, 9)
    for j in range(2, 13):
        assert np.allclose(B(x, 2.0 ** j), np.exp(-1j * 2.0 ** j * x), atol=1e-15)


def test_B_neighbouring_terms_overlap(B):
    # term j vanishes at 3 2^(j-1) but term j+1 sits on its plateau there
    x = np.linspace(-2, 2, 9)
    for j in range(2, 12):
        assert psi0(2.0 ** (1 - j) * 2.0 ** (j - 1)) == 0.0
        assert np.allclose(B(x, 3 * 2.0 ** (j - 1)), np.exp(-1j * 2.0 ** (j + 1) * x), atol=1e-15)
    # so at most two terms are active at any frequency
    xi = GB.xi
    active = sum((np.abs(2.0 ** (1 - j) * (xi - 2.0 ** j)) < 0.75).astype(int) for j in range(2, 13))
    assert active.max() == 2


def test_B_matches_direct_sum(B):
    rng = np.random.default_rng(0)
    x = rng.uniform(-GB.L, GB.L, 1000)
    xi = rng.uniform(-100, 6000, 1000)
    assert np.max(np.abs(B(x, xi) - direct_B(x, xi, 12))) < 1e-12


def test_B_bounded(B):
    x = np.linspace(-GB.L, GB.L, 64)
    vals = np.abs(B.rows(x, GB))
    assert vals.max() <= 2 + 1e-12


def test_B_rejects_small_band():
    with pytest.raises(ValueError):
        symbol_B(Grid(2 * np.pi, 64))
    with pytest.raises(ValueError):
        symbol_B(GB, j_max=20)


def test_C_declared_counts_and_plateau(C):
    assert C.declared.as_tuple() == (-0.5, 0, 1)
    lev, k, c = symbol_C_blocks(2.0, 10)
    assert sorted(k[lev == 4].tolist()) == [-17, -16, -15, 15, 16, 17]
    x = np.linspace(-1, 1, 5)
    for j, kk in [(4, 15), (4, -17), (7, 120), (10, 1000)]:
        assert np.allclose(C(x, 4 * kk), 2.0 ** (-j / 2) * np.exp(-4j * kk * x), atol=1e-15)


def test_C_matches_direct_sum(C):
    rng = np.random.default_rng(1)
    x = rng.uniform(-GC.L, GC.L, 1000)
    xi = rng.uniform(-200, 200, 1000)
    assert np.max(np.abs(C(x, xi) - direct_C(x, xi, 2.0, 10))) < 1e-12
    # block edges: xi = 4k + 3 sits where every block window vanishes or is exactly one
    edge = 4 * np.arange(-50, 50) + 3.0
    assert np.max(np.abs(C(0.1, edge) - direct_C(0.1, edge, 2.0, 10))) < 1e-12


def test_C_bounded(C):
    x = np.linspace(-GC.L, GC.L, 32)
    assert np.abs(C.rows(x, GC)).max() <= 2 * 2 ** (-1) + 1e-12


def test_C_rejects_bad_p():
    with pytest.raises(ValueError):
        symbol_C(1.0, GC)
    with pytest.raises(ValueError):
        symbol_C(2.0, Grid(np.pi, 64))


def test_A_construction():
    A = symbol_A(0.5)
    assert isinstance(A, OscillatorySymbol)
    assert A.declared.as_tuple() == (-0.5, 0.5, 1.0)
    with pytest.raises(ValueError):
        symbol_A(1.0)


def test_A_rho0_conjugate_symmetry_at_zero_frequency():
    A = symbol_A(0.0)
    x = np.array([0.1, 0.4, 1.3])
    assert np.allclose(A(x, 0 * x), np.conj(A(-x, 0 * x)), rtol=1e-12)
    val = A(0.0, 0.0)
    assert np.isfinite(val) and abs(val) > 0


@pytest.mark.parametrize("rho", [0.0, 0.5])
def test_A_quadrature_refinement(rho):
    A = symbol_A(rho)
    rng = np.random.default_rng(5)
    x = rng.uniform(-1.5, 1.5, 6)
    xi = rng.uniform(-60, 60, 6)
    assert np.max(np.abs(A.evaluate(x, xi) - A.evaluate(x, xi, refine=2))) < 1e-8


def test_A_rho0_order_minus_one():
    # (1 + |xi|) |a(x, xi)| shows no growth across the octaves of |xi| <= 64
    A = symbol_A(0.0)
    g = Grid(4.0, 512)
    x = np.linspace(-2, 2, 9)
    weighted = np.abs(A.rows(x, g)) * (1 + np.abs(g.xi))
    block_max = [weighted[:, (np.abs(g.xi) >= 2 ** j) & (np.abs(g.xi) < 2 ** (j + 1))].max() for j in range(7)]
    assert max(block_max) / min(block_max) < 2
    assert abs(np.polyfit(np.arange(7), np.log2(block_max), 1)[0]) < 0.15


@pytest.mark.parametrize("rho,tol", [(0.0, 1e-6), (0.5, 1e-3)])
def test_A_rows_match_pointwise(rho, tol):
    A = symbol_A(rho)
    g = Grid(4.0, 256)
    x = np.array([-0.7, 0.05, 1.2])
    R = A.rows(x, g)
    P = A(x[:, None], g.xi[None, ::16])
    assert np.max(np.abs(R[:, ::16] - P)) < tol * np.abs(P).max()


def test_checker_B_in_S011(B):
    rep = check_symbol_class(B, ClassParams(0, 1, 1), 2, 2, GB, j_min=2, j_max=12)
    assert len(rep.slopes) == 9
    assert all(abs(s) <= 0.15 for s in rep.slopes.values())
    assert all(r["seminorm"] >= 0 for r in rep.rows())


def test_checker_B_fails_S010(B):
    rep = check_symbol_class(B, ClassParams(0, 1, 0), 0, 1, GB, j_min=2, j_max=12)
    assert rep.slope(0, 1) == pytest.approx(1.0, abs=0.15)


def test_checker_reference_calibration():
    g = Grid(np.pi, 2 ** 14)
    a = reference_symbol(-1)
    rep = check_symbol_class(a, ClassParams(-1, 1, 0), 3, 0, g, j_min=2, j_max=12)
    assert all(abs(s) < 0.1 for s in rep.slopes.values())
    # tested against rho' = 1/2 the weight is off by 2^(j (rho' - rho) alpha)
    wrong = check_symbol_class(a, ClassParams(-1, 0.5, 0), 3, 0, g, j_min=2, j_max=12)
    for alpha in range(1, 4):
        assert wrong.slope(alpha, 0) == pytest.approx(-0.5 * alpha, abs=0.15)


def test_checker_rough_skips_x_derivatives(B):
    rep = check_symbol_class(B, ClassParams(0, 1, 0, rough=True), 1, 2, GB, j_min=2, j_max=6)
    assert set(rep.slopes) == {(0, 0), (1, 0)}


def test_checker_rejections(B):
    with pytest.raises(ValueError):
        check_symbol_class(B, ClassParams(0, 1, 1), 5, 0, GB)
    with pytest.raises(ValueError):
        check_symbol_class(B, ClassParams(0, 1, 1), 1, 1, GB, j_min=2, j_max=3)
    with pytest.raises(ValueError):
        check_symbol_class(B, ClassParams(0, 1, 1), 1, 1, GB, j_max=30)
    with pytest.raises(ValueError):
        check_symbol_class(B, ClassParams(0, 1, 1), 1, 1, GB, j_min=2, j_max=6, xi_step=1e-12)


def test_seminorm_csv(tmp_path, B):
    rep = check_symbol_class(B, ClassParams(0, 1, 1), 1, 1, GB, j_min=2, j_max=6)
    path = tmp_path / "s.csv"
    rep.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# seminorm report schema v1")
    assert lines[1] == "alpha,beta,j,seminorm,slope"
    assert len(lines) == 2 + 4 * 5
    assert rep.to_dict()["class"]["delta"] == 1
