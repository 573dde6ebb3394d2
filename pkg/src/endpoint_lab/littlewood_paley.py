"""Littlewood-Paley partition of unity, dyadic pieces, the discrete H^1 norm and atoms.

The low-pass cutoff ``Psi0`` equals 1 on ``|xi| <= 2/3`` and 0 on
``|xi| >= 3/4``.  In between it is a smooth step built from the normalised
primitive of the mollifier ``exp(-1/(1-t^2))``.  The annular bump is
``psi(xi) = Psi0(xi/2) - Psi0(xi)``, so that

    Psi0(xi) + sum_{j=0}^{J} psi(2^-j xi) = Psi0(2^-(J+1) xi)

telescopes exactly and equals 1 once ``2^-(J+1)|xi| <= 2/3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import (
    Grid,
    SampledFunction,
    Spectrum,
    forward_transform,
    inverse_transform,
    lp_norm,
)

__all__ = [
    "smooth_step",
    "psi0",
    "psi",
    "phi0_continuum",
    "PartitionOfUnity",
    "build_partition",
    "dyadic_piece",
    "low_pass",
    "h1_norm",
    "Atom",
    "make_atom",
    "atom_fourier_moment",
    "DEFAULT_GRID",
    "DEFAULT_SEED",
]

INNER = 2.0 / 3.0
OUTER = 3.0 / 4.0

DEFAULT_GRID = Grid(64.0, 2 ** 14)
DEFAULT_SEED = 20240611

# Quadrature rules for the primitive of the mollifier, fixed at import time.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_LAG_X, _LAG_W = np.polynomial.laguerre.laggauss(48)


def _mollifier(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _head(a):
    """int_0^a exp(-1/(1-t^2)) dt for 0 <= a <= 3/4 (Gauss-Legendre, analytic integrand)."""
    a = np.asarray(a, dtype=float)[..., None]
    nodes = 0.5 * a * (_GL_X + 1.0)
    return 0.5 * a[..., 0] * np.sum(_GL_W * _mollifier(nodes), axis=-1)


def _tail(a):
    """int_a^1 exp(-1/(1-t^2)) dt for 3/4 <= a < 1.

    With ``t = 1 - 1/v`` the integrand becomes
    ``exp(-v/2) * exp(-1/4 - 1/(4(2v-1))) / v^2`` on ``v >= 1/(1-a)``, which
    Gauss-Laguerre integrates to machine precision after the shift
    ``v = V + 2s``.
    """
    a = np.asarray(a, dtype=float)
    V = 1.0 / (1.0 - a)
    v = V[..., None] + 2.0 * _LAG_X
    g = np.exp(-0.25 - 0.25 / (2.0 * v - 1.0)) / v ** 2
    return 2.0 * np.exp(-0.5 * V) * np.sum(_LAG_W * g, axis=-1)


_SPLIT = 0.75
_HALF_MASS = float(_head(np.array(_SPLIT)) + _tail(np.array(_SPLIT)))


def _primitive_exact(a):
    """``int_0^a exp(-1/(1-t^2)) dt`` for ``0 <= a < 1`` from the quadrature rules."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    lo = a <= _SPLIT
    out[lo] = _head(a[lo])
    out[~lo] = _HALF_MASS - _tail(a[~lo])
    return out


# Piecewise Chebyshev table of the primitive on [0, 1]: 128 panels of degree
# 11 reproduce `_primitive_exact` to a few ulps at a fraction of the cost.
_CHEB_PANELS = 128
_CHEB_DEG = 11


def _build_table():
    xk = np.cos(np.pi * (np.arange(_CHEB_DEG + 1) + 0.5) / (_CHEB_DEG + 1))
    edges = np.linspace(0.0, 1.0, _CHEB_PANELS + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1] - edges[0])
    nodes = np.minimum(mid + half * xk, 1.0 - 1e-15)
    vals = _primitive_exact(nodes.ravel()).reshape(nodes.shape)
    return np.polynomial.chebyshev.chebfit(xk, vals.T, _CHEB_DEG).T


_CHEB_TABLE = _build_table()


def _primitive(a):
    """Table lookup of `_primitive_exact` (Clenshaw recurrence per panel)."""
    a = np.asarray(a, dtype=float)
    scaled = a * _CHEB_PANELS
    idx = np.minimum(scaled.astype(np.intp), _CHEB_PANELS - 1)
    loc = 2.0 * (scaled - idx) - 1.0
    coef = _CHEB_TABLE[idx]
    b1 = np.zeros_like(a)
    b2 = np.zeros_like(a)
    for k in range(_CHEB_DEG, 0, -1):
        b1, b2 = coef[..., k] + 2.0 * loc * b1 - b2, b1
    return coef[..., 0] + loc * b1 - b2


def smooth_step(t):
    """C^infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``, ``S(t) + S(1-t) = 1``.

    ``S(t)`` is the normalised primitive of ``exp(-1/(1-s^2))`` evaluated at
    ``s = 2t - 1``.
    """
    t = np.asarray(t, dtype=float)
    s = 2.0 * t - 1.0
    out = np.where(s >= 1.0, 1.0, 0.0)
    mid = np.abs(s) < 1.0
    if np.any(mid):
        sm = s[mid]
        out[mid] = np.clip(0.5 + 0.5 * np.sign(sm) * _primitive(np.abs(sm)) / _HALF_MASS, 0.0, 1.0)
    return out


def psi0(xi):
    """Low-pass cutoff: 1 on ``|xi| <= 2/3``, 0 on ``|xi| >= 3/4``, even, values in [0,1]."""
    a = np.abs(np.asarray(xi, dtype=float))
    return 1.0 - smooth_step((a - INNER) / (OUTER - INNER))


def psi(xi):
    """Annular bump ``Psi0(xi/2) - Psi0(xi)``, supported in ``2/3 < |xi| < 3/2``."""
    xi = np.asarray(xi, dtype=float)
    return psi0(0.5 * xi) - psi0(xi)


def phi0_continuum(t, n_nodes: int = 96):
    """Continuum ``Phi0(t) = int Psi0(xi) exp(i t xi) d xi`` (real and even).

    Split as ``2 sin(2t/3)/t`` (the plateau) plus the transition band
    ``2 int_{2/3}^{3/4} cos(t xi) Psi0(xi) d xi`` by Gauss-Legendre.  Only
    intended for moderate ``|t|``; the profile decays slowly (about 1e-2 at
    ``|t| = 100``).
    """
    t = np.asarray(t, dtype=float)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    nodes = INNER + 0.5 * (OUTER - INNER) * (x + 1.0)
    wts = 0.5 * (OUTER - INNER) * w * psi0(nodes)
    band = 2.0 * np.cos(np.multiply.outer(t, nodes)) @ wts
    plateau = 2.0 * INNER * np.sinc(INNER * t / np.pi)
    return plateau + band


@dataclass(frozen=True)
class PartitionOfUnity:
    """The pair (Psi0, psi) with their grid spatial profiles (Phi0, phi).

    ``phi0`` and ``phi`` are the inverse grid transforms of the sampled
    cutoffs, i.e. the 2L-periodisations of the continuum profiles.
    """

    grid: Grid
    psi0: Callable = psi0
    psi: Callable = psi
    phi0: SampledFunction | None = None
    phi: SampledFunction | None = None

    def psi_j(self, j: int, xi):
        """``psi(2^-j xi)`` (``j`` may be negative)."""
        return self.psi(np.ldexp(np.asarray(xi, dtype=float), -int(j)))


def build_partition(grid: Grid) -> PartitionOfUnity:
    """Build the partition of unity and its spatial profiles on ``grid``."""
    if grid.bandwidth < 2.0:
        raise ValueError(
            f"bandwidth {grid.bandwidth:.4g} < 2: the annulus 2/3 < |xi| < 3/2 is not representable; "
            "increase M or decrease L")
    phi0 = inverse_transform(Spectrum(grid, psi0(grid.xi)))
    phi = inverse_transform(Spectrum(grid, psi(grid.xi)))
    return PartitionOfUnity(grid=grid, phi0=phi0, phi=phi)


def _max_octave(grid: Grid) -> int:
    """Largest j with supp psi(2^-j .) = 2^j (2/3, 3/2) inside the band."""
    return int(math.floor(math.log2(grid.bandwidth / 1.5)))


def dyadic_piece(f: SampledFunction, j: int, P: PartitionOfUnity) -> SampledFunction:
    """``phi_j * f`` computed as ``inverse_transform(psi(2^-j xi) fhat)``."""
    g = f.grid
    if g != P.grid:
        raise ValueError("dyadic_piece: grid of f differs from the partition grid")
    jmax = _max_octave(g)
    if j > jmax:
        raise ValueError(
            f"octave j={j} exceeds the band (2^j * 3/2 = {1.5 * 2.0 ** j:.4g} > bandwidth "
            f"{g.bandwidth:.4g}); largest admissible j is {jmax}")
    F = forward_transform(f)
    return inverse_transform(Spectrum(g, P.psi_j(j, g.xi) * F.coeffs))


def low_pass(f: SampledFunction, P: PartitionOfUnity) -> SampledFunction:
    """``Phi0 * f`` computed spectrally."""
    F = forward_transform(f)
    return inverse_transform(Spectrum(f.grid, P.psi0(f.grid.xi) * F.coeffs))


def _octave_range(F: Spectrum, rel_tol: float = 1e-14):
    """Octaves needed to cover the support of F (zero mode excluded)."""
    g = F.grid
    mag = np.abs(F.coeffs)
    scale = mag.max(initial=0.0)
    if scale == 0.0:
        return None
    xi = np.abs(g.xi)
    live = (mag > rel_tol * scale) & (xi > 0)
    if not np.any(live):
        return None
    xi_lo, xi_hi = xi[live].min(), xi[live].max()
    # sum_{j >= jmin} psi_j = 1 - Psi0(2^-jmin xi) = 1 once |xi| >= (3/4) 2^jmin
    jmin = int(math.floor(math.log2(xi_lo / OUTER)))
    jmax = _max_octave(g)
    # sum_{j <= jmax} psi_j = Psi0(2^-(jmax+1) xi) = 1 only for |xi| <= (2/3) 2^(jmax+1)
    if xi_hi > INNER * 2.0 ** (jmax + 1):
        raise ValueError(
            f"spectrum reaches |xi| = {xi_hi:.4g}, beyond the highest fully representable "
            f"octave (|xi| <= {INNER * 2.0 ** (jmax + 1):.4g}); refine the grid to avoid aliasing")
    return jmin, jmax


def h1_norm(f: SampledFunction, P: PartitionOfUnity, return_pieces: bool = False):
    """Discrete ``||(sum_j |phi_j * f|^2)^(1/2)||_1`` over all representable octaves.

    The zero frequency is not seen by any ``psi_j``; band-limited inputs
    with a nonzero mean are measured modulo their mean.
    """
    g = f.grid
    if g != P.grid:
        raise ValueError("h1_norm: grid of f differs from the partition grid")
    F = forward_transform(f)
    rng = _octave_range(F)
    if rng is None:
        return (0.0, {}) if return_pieces else 0.0
    jmin, jmax = rng
    sq = np.zeros(g.M)
    pieces = {}
    for j in range(jmin, jmax + 1):
        w = P.psi_j(j, g.xi)
        if not np.any(w * np.abs(F.coeffs)):
            continue
        piece = inverse_transform(Spectrum(g, w * F.coeffs))
        sq += np.abs(piece.values) ** 2
        if return_pieces:
            pieces[j] = piece
    val = float(g.h * np.sum(np.sqrt(sq)))
    return (val, pieces) if return_pieces else val


@dataclass(frozen=True)
class Atom:
    """L^2-atom: support in [-r, r], zero mean, ``||b||_2 <= r^-1/2``.

    ``values`` are the grid samples.  ``profile`` evaluates the continuum
    atom the samples come from (exact zero mean and norm ``r^-1/2``), which
    quadrature-based routes use instead of the samples.
    """

    r: float
    values: SampledFunction
    kind: str = "haar"
    seed: int | None = None
    coef: tuple | None = None

    def __post_init__(self):
        x = self.values.grid.x
        v = self.values.values
        if np.any(v[np.abs(x) > self.r * (1 + 1e-12)] != 0):
            raise ValueError("atom support exceeds [-r, r]")
        h = self.values.grid.h
        if abs(h * np.sum(v)) > 1e-12 * self.r ** -0.5:
            raise ValueError("atom mean is not zero")
        if lp_norm(self.values, 2) > self.r ** -0.5 * (1 + 1e-12):
            raise ValueError("atom L^2 norm exceeds r^-1/2")

    def profile(self, y):
        """Continuum atom at the points ``y`` (zero outside ``[-r, r]``)."""
        y = np.asarray(y, dtype=float)
        r = self.r
        if self.kind == "haar":
            c = 2.0 ** -0.5 / r
            return np.where((y > -r) & (y < 0), c, 0.0) - np.where((y > 0) & (y < r), c, 0.0)
        coef = np.asarray(self.coef)
        n = np.arange(coef.size)
        scale = r ** -0.5 / math.sqrt(r * np.sum(coef ** 2 * 2.0 / (2 * n + 1)))
        inside = np.abs(y) <= r
        return np.where(inside, scale * np.polynomial.legendre.legval(np.clip(y / r, -1, 1), coef), 0.0)


def make_atom(r: float, kind: str = "haar", seed: int = DEFAULT_SEED,
              grid: Grid = DEFAULT_GRID) -> Atom:
    """Generate an L^2-atom of radius ``r`` on ``grid``.

    Parameters
    ----------
    r : float
        Radius, at least ``4h`` and at most ``L/2``.
    kind : {"haar", "random"}
        ``haar`` gives ``2^-1/2 r^-1 (chi_(-r,0) - chi_(0,r))`` sampled with
        half values at the jump points; ``random`` gives a random Legendre
        series ``sum_{n=1}^{8} c_n P_n(x / r)`` on [-r, r] (zero continuum
        mean), projected to zero grid mean and rescaled to grid norm ``r^-1/2``.
    seed : int
        Seed for ``kind="random"`` (ignored for Haar atoms).
    """
    if not r >= 4 * grid.h:
        raise ValueError(f"atom radius r={r} is below 4h={4 * grid.h:.4g}; refine the grid")
    if r > 0.5 * grid.L:
        raise ValueError(f"atom radius r={r} exceeds L/2={0.5 * grid.L}")
    x = grid.x
    tol = 1e-9 * grid.h
    if kind == "haar":
        c = 2.0 ** -0.5 / r
        v = np.where((x > -r) & (x < 0), c, 0.0) - np.where((x > 0) & (x < r), c, 0.0)
        end = np.abs(x) <= r  # end-point half values only for samples inside [-r, r]
        v = v + np.where(end & (np.abs(x + r) < tol), 0.5 * c, 0.0) - np.where(end & (np.abs(x - r) < tol), 0.5 * c, 0.0)
        v[np.abs(x) < tol] = 0.0
        return Atom(r, SampledFunction(grid, v), kind="haar")
    if kind != "random":
        raise ValueError(f"unknown atom kind {kind!r}; expected 'haar' or 'random'")
    rng = np.random.default_rng(seed)
    deg = 8
    coef = rng.standard_normal(deg + 1) / (1.0 + np.arange(deg + 1))
    coef[0] = 0.0  # P_1..P_8 have zero mean on [-1, 1]
    supp = np.abs(x) <= r
    v = np.zeros(grid.M)
    v[supp] = np.polynomial.legendre.legval(x[supp] / r, coef)
    v[supp] -= v[supp].mean()
    v *= r ** -0.5 / lp_norm(SampledFunction(grid, v), 2)
    return Atom(r, SampledFunction(grid, v), kind="random", seed=seed, coef=tuple(float(c) for c in coef))


def atom_fourier_moment(b: Atom) -> float:
    """``dxi * sum_{m != 0} |bhat(xi_m)| / |xi_m|``."""
    F = forward_transform(b.values)
    xi = F.grid.xi
    nz = xi != 0
    return float(F.grid.dxi * np.sum(np.abs(F.coeffs[nz]) / np.abs(xi[nz])))
