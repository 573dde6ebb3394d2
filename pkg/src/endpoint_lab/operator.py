"""Applying ``T_a``, kernels, dyadic pieces, Dirichlet kernels and ``L^2`` operator norms.

On the grid

    T_a f(x_k) = dxi * sum_m a(x_k, xi_m) fhat(xi_m) exp(i x_k xi_m),

and `apply` computes exactly this sum by whichever route fits the symbol:

* x-independent multipliers: one forward and one inverse FFT;
* lacunary symbols whose modulations are integer multiples of ``dxi``
  (symbols B and C on suitable grids): every block's windowed spectrum is
  shifted by its modulation and summed, followed by a single inverse FFT.
  Because ``exp(i x_k M dxi) = 1`` on the grid points the shift may wrap
  around the band without changing the result;
* everything else: rows ``a(x_i, .)`` in blocks, ``O(M^2)``.

Kernels follow from ``T_a f(x) = int k(x, y) f(y) dy``, which with the
transform convention of `endpoint_lab.grid` gives

    k(x, y) = (2 pi)^-1 int exp(i (x - y) xi) a(x, xi) d xi.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .grid import Grid, SampledFunction, Spectrum, _signs, forward_transform, inverse_transform
from .littlewood_paley import PartitionOfUnity, dyadic_piece, low_pass, psi0, smooth_step
from .symbols import CSV_SCHEMA_VERSION, LacunarySymbol, OscillatorySymbol, Symbol

__all__ = [
    "apply",
    "KernelSlice",
    "kernel_slice",
    "plateau_window",
    "kernel_rho0",
    "dyadic_apply",
    "dyadic_kernel_slice",
    "dirichlet_kernel",
    "operator_matrix",
    "OpNormEstimate",
    "l2_opnorm_estimate",
]


def _check_grid(a: Symbol, grid: Grid) -> None:
    if a.grid is not None and a.grid != grid:
        raise ValueError(f"grid mismatch between symbol {a.name} ({a.grid}) and input ({grid})")


def _apply_lacunary(a: LacunarySymbol, F: np.ndarray, grid: Grid) -> Optional[np.ndarray]:
    shifts = a.modulation_shifts(grid)
    block, m, win = a.grid_blocks(grid)
    M = grid.M
    src = grid.index_of_frequency(m)
    contrib = a.coef[block] * win * F[src]
    if shifts is not None:
        # exp(-i w x) exp(i x xi_m) = exp(i x xi_{m - s}); wrap mod M is exact on the grid
        dest = (m - shifts[block] + M // 2) % M
        G = np.bincount(dest, weights=contrib.real, minlength=M) \
            + 1j * np.bincount(dest, weights=contrib.imag, minlength=M)
        return inverse_transform(Spectrum(grid, G)).values
    # non-integer modulations: one inverse FFT per block
    x = grid.x
    out = np.zeros(M, dtype=complex)
    for b in range(a.n_blocks):
        sel = block == b
        if not np.any(sel):
            continue
        G = np.zeros(M, dtype=complex)
        G[src[sel]] = contrib[sel]
        out += np.exp(-1j * a.omega[b] * x) * inverse_transform(Spectrum(grid, G)).values
    return out


def apply(a: Symbol, f: SampledFunction, block: int = 256) -> SampledFunction:
    """``T_a f`` on the grid of ``f``.

    Parameters
    ----------
    a : Symbol
    f : SampledFunction
        Should be band limited within the grid bandwidth.
    block : int
        Row block size of the generic route.
    """
    g = f.grid
    _check_grid(a, g)
    F = forward_transform(f).coeffs
    if a.x_independent:
        w = a(np.zeros(1), g.xi)
        return inverse_transform(Spectrum(g, w * F))
    if isinstance(a, LacunarySymbol):
        return SampledFunction(g, _apply_lacunary(a, F, g))
    x, xi = g.x, g.xi
    out = np.empty(g.M, dtype=complex)
    for s in range(0, g.M, block):
        xb = x[s:s + block]
        rows = np.asarray(a.rows(xb, g), dtype=complex)
        if not np.all(np.isfinite(rows)):
            raise ValueError(f"{a.name}: non-finite symbol values")
        out[s:s + block] = g.dxi * ((rows * np.exp(1j * np.outer(xb, xi))) @ F)
    return SampledFunction(g, out)


# ---------------------------------------------------------------------------
# kernels


@dataclass
class KernelSlice:
    """``k(x, y_k)`` at a fixed x for all grid points ``y_k``."""

    x: float
    grid: Grid
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} kernel values, got shape {self.values.shape}")

    @property
    def y(self) -> np.ndarray:
        return self.grid.x

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# kernel slice schema v{CSV_SCHEMA_VERSION}; x={self.x!r}; "
                     f"L={self.grid.L!r}; M={self.grid.M}; window={self.metadata.get('window')}\n")
            w = csv.writer(fh)
            w.writerow(["y", "re_k", "im_k"])
            for yv, kv in zip(self.y, self.values):
                w.writerow([repr(float(yv)), repr(float(kv.real)), repr(float(kv.imag))])


def plateau_window(grid: Grid, plateau: float = 0.5) -> Callable:
    """Smooth band-limiting window: 1 for ``|xi| <= plateau * bandwidth``, 0 at the band edge."""
    top = grid.bandwidth
    width = 1.0 - plateau

    def window(xi):
        return 1.0 - smooth_step((np.abs(xi) / top - plateau) / width)

    window.description = f"plateau(plateau={plateau:g}, bandwidth={top:.6g})"
    return window


def kernel_slice(a: Symbol, x: float, grid: Grid, window: Optional[Callable] = None,
                 method: str = "fft") -> KernelSlice:
    """``k(x, .)`` on the grid.

    ``method="fft"`` evaluates ``(dxi / 2 pi) sum_m a(x, xi_m) w(xi_m) exp(i (x - y) xi_m)``
    with one FFT.  For a symbol that is not band limited inside the grid
    band a smooth ``plateau_window`` is applied unless ``window`` is given;
    the window used is recorded in ``metadata["window"]``.

    ``method="exact"`` is available for `OscillatorySymbol` and returns the
    analytic kernel values.
    """
    x = float(x)
    _check_grid(a, grid)
    meta = {"method": method, "x": x, "grid": grid.metadata()}
    if method == "exact":
        if not isinstance(a, OscillatorySymbol):
            raise ValueError("method='exact' needs a symbol with a closed-form kernel")
        with np.errstate(invalid="ignore"):
            vals = a.kernel(np.full(grid.M, x), grid.x)
        meta["window"] = None
        return KernelSlice(x, grid, vals, meta)
    if method != "fft":
        raise ValueError(f"unknown method {method!r}; expected 'fft' or 'exact'")
    xi = grid.xi
    if window is None and (a.band_limit is None or a.band_limit >= grid.bandwidth):
        window = plateau_window(grid)
    if window is None:
        w = 1.0
        meta["window"] = None
    else:
        w = np.asarray(window(xi), dtype=float)
        meta["window"] = getattr(window, "description", getattr(window, "__name__", repr(window)))
    row = a.rows(np.array([x]), grid)[0] * w
    # sum_m B_m exp(-i y_k xi_m) with y_k = -L + k h is an FFT of (-1)^m B_m
    B = row * np.exp(1j * x * xi) * _signs(grid.M)
    vals = np.fft.fft(np.fft.ifftshift(B)) * (grid.dxi / (2.0 * np.pi))
    return KernelSlice(x, grid, vals, meta)


def kernel_rho0(P: Optional[PartitionOfUnity], x, y):
    """Kernel of ``symbol_A(0)``: ``Psi0(y - x) K(y)``, computed through the cosine integral.

    ``K(y) = 2 int_{2/3}^inf cos(y u) (1 - Psi0(u)) / u du`` is real and even.
    ``P`` (optional) only pins the cutoff; the closed form is written for the
    standard ``Psi0`` of `endpoint_lab.littlewood_paley`.
    """
    if P is not None and P.psi0 is not psi0:
        raise ValueError("kernel_rho0 is implemented for the standard cutoff Psi0 only")
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise ValueError("kernel_rho0: y = 0 is a logarithmic singularity")
    return kernels.kernel_rho0_values(x, y)


def dyadic_apply(a: Symbol, f: SampledFunction, j: Optional[int], P: PartitionOfUnity) -> SampledFunction:
    """``T_j f``, the operator with symbol ``a(x, xi) psi(2^-j xi)``; ``j=None`` gives ``T_{a Psi0}``.

    Since the cutoff depends on xi only, ``T_j f = T_a (phi_j * f)``.
    """
    piece = low_pass(f, P) if j is None else dyadic_piece(f, j, P)
    return apply(a, piece)


def dyadic_kernel_slice(a: Symbol, x: float, j: int, P: PartitionOfUnity) -> KernelSlice:
    """Kernel ``k_j(x, .)`` of the dyadic piece ``T_j``."""

    def window(xi):
        return P.psi_j(j, xi)

    window.description = f"psi(2^-{j} xi)"
    return kernel_slice(a, x, P.grid, window=window)


# ---------------------------------------------------------------------------
# Dirichlet kernel


def dirichlet_kernel(A: int, t):
    """``D_A(t) = sum_{|k| <= A} exp(i k t)`` (real valued, returned as complex).

    The closed form ``sin((A + 1/2) t) / sin(t / 2)`` is used away from
    ``2 pi Z``; within ``|sin(t/2)| < 1e-3`` the cosine sum is evaluated
    directly.
    """
    A = int(A)
    if A < 0:
        raise ValueError("Dirichlet kernel order must be nonnegative")
    t = np.asarray(t, dtype=float)
    s = np.sin(0.5 * t)
    near = np.abs(s) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(near, 0.0, np.sin((A + 0.5) * t) / np.where(near, 1.0, s))
    if np.any(near):
        k = np.arange(1, A + 1)
        tn = t[near] if t.ndim else t
        direct = 1.0 + 2.0 * np.cos(np.multiply.outer(tn, k)).sum(axis=-1)
        if t.ndim:
            out[near] = direct
        else:
            out = direct
    return np.asarray(out, dtype=complex) if t.ndim else complex(out)


# ---------------------------------------------------------------------------
# L^2 operator norm


def operator_matrix(a: Symbol, grid: Grid, block: int = 256) -> np.ndarray:
    """Dense grid matrix of ``T_a`` (``M`` by ``M``): ``(T f)_k = sum_l T[k, l] f_l``."""
    _check_grid(a, grid)
    M, x, xi = grid.M, grid.x, grid.xi
    T = np.empty((M, M), dtype=complex)
    c = grid.dxi * grid.h / (2.0 * np.pi)
    sg = _signs(M)
    for s in range(0, M, block):
        xb = x[s:s + block]
        B = a.rows(xb, grid) * np.exp(1j * np.outer(xb, xi))
        # sum_m B[k, m] exp(-i x_l xi_m) = FFT over m of (-1)^m B[k, m]
        T[s:s + block] = c * np.fft.fft(np.fft.ifftshift(B * sg, axes=1), axis=1)
    return T


@dataclass
class OpNormEstimate:
    """Power-iteration estimate of the largest singular value of ``T_a`` on the grid."""

    value: float
    converged: bool
    iterations: int
    history: list
    grid: dict

    def __float__(self):
        return self.value


def l2_opnorm_estimate(a: Symbol, grid: Grid, iters: int = 200, tol: float = 1e-3,
                       seed: int = 0, matrix: Optional[np.ndarray] = None) -> OpNormEstimate:
    """Largest singular value of the dense grid matrix by power iteration on ``T^H T``.

    The discrete ``L^2`` norm has uniform weights, so the operator norm equals
    the matrix 2-norm.  Iteration stops once the relative change of the
    estimate drops below ``tol / 10``; ``converged`` is False (flagged) if the
    last change exceeds ``tol`` when the budget ``iters`` is exhausted.
    The estimates ``history`` are nondecreasing.
    """
    if grid.M > 4096:
        raise ValueError(f"dense route limited to M <= 4096, got M={grid.M}")
    if iters < 1:
        raise ValueError("iters must be positive")
    T = operator_matrix(a, grid) if matrix is None else matrix
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.M) + 1j * rng.standard_normal(grid.M)
    v /= np.linalg.norm(v)
    hist = []
    change = math.inf
    for it in range(1, iters + 1):
        w = T.conj().T @ (T @ v)
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            hist.append(0.0)
            change = 0.0
            break
        est = math.sqrt(nrm)
        if hist:
            change = abs(est - hist[-1]) / est
        hist.append(est)
        v = w / nrm
        if change < 0.1 * tol:
            break
    return OpNormEstimate(value=hist[-1], converged=bool(change <= tol), iterations=len(hist),
                          history=hist, grid=grid.metadata())
