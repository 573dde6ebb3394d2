import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from endpoint_lab.grid import Grid, SampledFunction, Spectrum, direct_apply_oracle, forward_transform, inverse_transform
from endpoint_lab.littlewood_paley import build_partition, dyadic_piece, psi0
from endpoint_lab.operator import (apply, dirichlet_kernel, dyadic_apply, dyadic_kernel_slice, kernel_rho0,
                                   kernel_slice, l2_opnorm_estimate, operator_matrix)
from endpoint_lab.symbols import (ClassParams, identity_symbol, multiplier_symbol, symbol_A, symbol_B,
                                  symbol_C)

from conftest import random_bandlimited

G = Grid(2 * np.pi, 2048)
P = build_partition(G)


def lacunary_fN(g, N):
    return inverse_transform(Spectrum(g, sum(psi0(g.xi - 2.0 ** s) for s in range(2, N + 2))))


def test_identity():
    f = random_bandlimited(G, 0)
    out = apply(identity_symbol(), f)
    assert np.max(np.abs(out.values - f.values)) < 1e-12 * np.max(np.abs(f.values))


def test_B_on_fN_gives_N_phi0():
    g = Grid(2 * np.pi, 2 ** 13)
    Pg = build_partition(g)
    B = symbol_B(g, Pg)
    out = apply(B, lacunary_fN(g, 8)).values
    ref = 8 * Pg.phi0.values
    assert np.max(np.abs(out - ref)) < 1e-8 * np.max(np.abs(ref))


def test_C_on_fN_integer_count():
    p, N = 2.0, 10
    g = Grid(np.pi, 2 ** 15)
    Pg = build_partition(g)
    C = symbol_C(p, g, Pg, j_max=N + 1)
    F = np.zeros(g.M)
    scalar = 0.0
    for s in range(2, N + 2):
        ks = [k for k in range(-2 ** (s + 1), 2 ** (s + 1) + 1) if 7 * 2 ** s < 8 * abs(k) < 9 * 2 ** s]
        for k in ks:
            F = F + 2.0 ** (-s * (1 - 1 / p)) * psi0(g.xi - 4 * k)
        scalar += 2.0 ** -s * len(ks)
    out = apply(C, inverse_transform(Spectrum(g, F))).values
    ref = scalar * Pg.phi0.values
    assert np.max(np.abs(out - ref)) < 1e-8 * np.max(np.abs(ref))


@pytest.mark.parametrize("which", ["B", "C"])
def test_fast_path_matches_oracle(which):
    a = symbol_B(G, P) if which == "B" else symbol_C(4 / 3, Grid(np.pi, 2048))
    g = a.grid
    for seed in range(3):
        f = random_bandlimited(g, seed, band=g.bandwidth)
        fast, slow = apply(a, f).values, direct_apply_oracle(a, f).values
        assert np.max(np.abs(fast - slow)) < 1e-9 * np.max(np.abs(slow))


def test_generic_route_matches_oracle():
    g = Grid(4.0, 128)
    A = symbol_A(0.0)
    f = random_bandlimited(g, 3, band=20.0)
    fast, slow = apply(A, f).values, direct_apply_oracle(A, f).values
    assert np.max(np.abs(fast - slow)) < 1e-5 * np.max(np.abs(slow))


def test_non_integer_modulations_fall_back():
    g = Grid(3.0, 1024)   # 2^j / dxi is not an integer here
    B = symbol_B(g)
    f = random_bandlimited(g, 1, band=g.bandwidth)
    fast, slow = apply(B, f).values, direct_apply_oracle(B, f).values
    assert np.max(np.abs(fast - slow)) < 1e-9 * np.max(np.abs(slow))


def test_grid_mismatch():
    with pytest.raises(ValueError):
        apply(symbol_B(G, P), random_bandlimited(Grid(np.pi, 2048), 0))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_linearity(seed, al, be):
    B = symbol_B(G, P)
    f, g2 = random_bandlimited(G, seed), random_bandlimited(G, seed + 1)
    lhs = apply(B, al * f + be * g2).values
    rhs = al * apply(B, f).values + be * apply(B, g2).values
    scale = max(1.0, np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * scale * (1 + abs(al) + abs(be))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(-500, 500))
def test_multiplier_commutes_with_translation(seed, shift):
    a = multiplier_symbol(lambda xi: np.exp(-np.abs(xi)) * (1 + 1j * xi), ClassParams(-1, 1, 0))
    f = random_bandlimited(G, seed)
    moved = SampledFunction(G, np.roll(f.values, shift))
    lhs = apply(a, moved).values
    rhs = np.roll(apply(a, f).values, shift)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(rhs))


def test_kernel_consistency_B():
    B = symbol_B(G, P)
    f = G.sample(lambda x: np.exp(-8 * x ** 2) * np.cos(3 * x))
    Tf = apply(B, f).values
    for i in (100, 1024, 1500):
        ks = kernel_slice(B, G.x[i], G)
        assert ks.metadata["window"] is None
        assert abs(G.h * np.dot(ks.values, f.values) - Tf[i]) < 1e-6 * np.max(np.abs(Tf))


def test_kernel_slice_of_psi0_multiplier():
    g = Grid(16.0, 1024)
    Pg = build_partition(g)
    a = multiplier_symbol(psi0, ClassParams(-10, 1, 0), band_limit=0.75)
    i = 700
    ks = kernel_slice(a, g.x[i], g)
    n = (i - np.arange(g.M) + g.M // 2) % g.M   # index of x_i - y_k in the grid
    assert np.max(np.abs(ks.values - Pg.phi0.values[n] / (2 * np.pi))) < 1e-14
    assert ks.y is not None and len(ks.values) == g.M


def test_kernel_slice_window_recorded(tmp_path):
    g = Grid(4.0, 256)
    ks = kernel_slice(symbol_A(0.5), 0.2, g)
    assert ks.metadata["window"].startswith("plateau")
    ks.to_csv(tmp_path / "k.csv")
    assert (tmp_path / "k.csv").read_text().startswith("# kernel slice schema v1")
    with pytest.raises(ValueError):
        kernel_slice(symbol_A(0.5), 0.2, g, method="bogus")
    with pytest.raises(ValueError):
        kernel_slice(symbol_B(G, P), 0.0, G, method="exact")


def test_kernel_rho0_properties():
    with pytest.raises(ValueError):
        kernel_rho0(None, 0.1, 0.0)
    y = 2.0 ** -np.arange(4, 13)
    k_pos, k_neg = kernel_rho0(None, 0.0, y), kernel_rho0(None, 0.0, -y)
    assert np.allclose(k_pos, k_neg, rtol=1e-15)
    # -Ci(s) = -gamma - ln s + O(s^2): K(y) - 2 ln(1/y) settles to a constant
    excess = k_pos - 2 * np.log(1 / y)
    assert np.ptp(excess) < 1e-3
    assert np.all(k_pos >= 2 * math.cos(1) * np.log(1 / y))


def test_kernel_rho0_matches_fft_route():
    g = Grid(2.0, 2 ** 15)
    A = symbol_A(0.0, near_radius=1 / 32)
    y = g.x
    sel = np.flatnonzero((np.abs(y) > 2.0 ** -8) & (np.abs(y) < 2.0 ** -4))
    pick = sel[np.linspace(0, sel.size - 1, 10).astype(int)]
    worst = 0.0
    for x in (-0.3, 0.2):
        ks = kernel_slice(A, x, g)
        exact = kernel_rho0(None, x, y[pick])
        worst = max(worst, np.max(np.abs(ks.values[pick].real - exact) / np.abs(exact)))
    assert worst < 1e-4


def test_dyadic_identity_reduces_to_piece():
    f = random_bandlimited(G, 4)
    for j in (0, 3, 6):
        assert np.allclose(dyadic_apply(identity_symbol(), f, j, P).values, dyadic_piece(f, j, P).values,
                           atol=1e-13)


@pytest.mark.parametrize("which", ["B", "C", "A0"])
def test_dyadic_reconstruction(which):
    if which == "B":
        g, a = G, symbol_B(G, P)
    elif which == "C":
        g = Grid(np.pi, 2048)
        a = symbol_C(3.0, g)
    else:
        g = Grid(4.0, 128)
        a = symbol_A(0.0)
    Pg = build_partition(g)
    f = random_bandlimited(g, 7, band=(2 / 3) * 2 ** math.floor(math.log2(g.bandwidth / 1.5)) * 2)
    total = dyadic_apply(a, f, None, Pg).values.copy()
    jmax = math.floor(math.log2(g.bandwidth / 1.5))
    for j in range(0, jmax + 1):
        total += dyadic_apply(a, f, j, Pg).values
    ref = apply(a, f).values
    assert np.max(np.abs(total - ref)) < 1e-9 * np.max(np.abs(ref))


def test_dyadic_kernel_bound_rho_half():
    g = Grid(4.0, 512)
    Pg = build_partition(g)
    A = symbol_A(0.5)
    rho = 0.5
    sups = {}
    for j in (4, 5, 6):
        vals = []
        for x in (-0.5, 0.0, 0.3):
            ks = dyadic_kernel_slice(A, x, j, Pg)
            d = np.abs(((x - g.x) + g.L) % (2 * g.L) - g.L)
            vals.append(np.max(np.abs(ks.values) * (1 + 2.0 ** (2 * j * rho) * d ** 2) * 2.0 ** (-j * rho)))
        sups[j] = max(vals)
    assert all(np.isfinite(v) for v in sups.values())
    assert sups[6] < 2 * max(sups[4], sups[5])
    assert ks.metadata["window"] == "psi(2^-6 xi)"


def test_dirichlet_values():
    assert dirichlet_kernel(3, 0.0) == pytest.approx(7)
    assert dirichlet_kernel(1, math.pi) == pytest.approx(-1)
    assert dirichlet_kernel(0, 1.234) == pytest.approx(1)
    with pytest.raises(ValueError):
        dirichlet_kernel(-1, 0.0)


def test_dirichlet_bound_exhaustive():
    rng = np.random.default_rng(99)
    t = rng.uniform(-4 * np.pi, 4 * np.pi, 1000)
    for A in range(0, 65):
        D = dirichlet_kernel(A, t)
        assert np.max(np.abs(D.imag)) == 0
        bound = np.minimum(2 * A + 1, 1 / np.abs(np.sin(t / 2)))
        assert np.all(np.abs(D) <= bound * (1 + 1e-12))


@pytest.mark.parametrize("A", [1, 7, 64])
def test_dirichlet_matches_direct_sum(A):
    t = np.concatenate([np.linspace(-7, 7, 301), 2 * np.pi + np.array([-3e-3, -1e-3, 0, 1e-6, 2.1e-3])])
    direct = np.exp(1j * np.outer(t, np.arange(-A, A + 1))).sum(axis=1)
    assert np.max(np.abs(dirichlet_kernel(A, t) - direct)) < 1e-10 * (2 * A + 1)


def test_opnorm_identity_and_cutoff():
    g = Grid(4.0, 256)
    est = l2_opnorm_estimate(identity_symbol(), g)
    assert est.value == pytest.approx(1.0, abs=1e-6) and est.converged
    cut = l2_opnorm_estimate(multiplier_symbol(psi0, ClassParams(-5, 1, 0), band_limit=0.75), g)
    assert cut.value <= 1 + 1e-12
    with pytest.raises(ValueError):
        l2_opnorm_estimate(identity_symbol(), Grid(4.0, 8192))


def test_opnorm_matches_svd_and_is_monotone():
    g = Grid(8.0, 512)
    A = symbol_A(0.5)
    T = operator_matrix(A, g)
    f = random_bandlimited(g, 2)
    assert np.allclose(T @ f.values, apply(A, f).values, atol=1e-12 * np.max(np.abs(f.values)))
    est = l2_opnorm_estimate(A, g, matrix=T)
    sv = np.linalg.svd(T, compute_uv=False)[0]
    assert est.value == pytest.approx(sv, rel=1e-2)
    assert est.value <= sv * (1 + 1e-12)
    assert np.all(np.diff(est.history) >= -1e-12 * sv)
    short = l2_opnorm_estimate(A, g, iters=2, tol=1e-12, matrix=T)
    assert not short.converged and short.iterations == 2


def test_opnorm_grid_stability():
    A = symbol_A(0.5)
    vals = [l2_opnorm_estimate(A, Grid(8.0, M)).value for M in (512, 1024, 2048)]
    assert max(vals) / min(vals) < 1.05
