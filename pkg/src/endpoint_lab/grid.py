"""Uniform periodic grid, Fourier transform convention and discrete norms.

Convention
----------
The continuous transform is

.. math:: \\hat f(\\xi) = (2\\pi)^{-1} \\int f(y) e^{-iy\\xi} dy,
          \\qquad f(x) = \\int e^{ix\\xi} \\hat f(\\xi) d\\xi,

so that the operator with symbol ``a == 1`` is the identity.  On the grid
``x_k = -L + k h`` (``0 <= k < M``) with frequencies ``xi_m = m * dxi``
(``-M/2 <= m < M/2``) both integrals become Riemann sums, which are exact
inverses of each other because ``dxi * h * M / (2 pi) = 1``.

Spectra are stored in centered order: array index ``i`` holds frequency
``m = i - M/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "SampledFunction",
    "Spectrum",
    "forward_transform",
    "inverse_transform",
    "lp_norm",
    "weak_l1_quasinorm",
    "direct_apply_oracle",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Periodic grid on ``[-L, L)`` with ``M`` samples (``M`` a power of two)."""

    L: float
    M: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"half-length L must be positive and finite, got {self.L}")
        M = int(self.M)
        if M != self.M or M < 2 or M & (M - 1):
            raise ValueError(f"grid size M must be a power of two >= 2, got {self.M}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def dxi(self) -> float:
        return np.pi / self.L

    @property
    def bandwidth(self) -> float:
        """Largest representable frequency magnitude ``pi M / (2 L)``."""
        return np.pi * self.M / (2.0 * self.L)

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.M)

    @property
    def m(self) -> np.ndarray:
        return np.arange(-self.M // 2, self.M // 2)

    @property
    def xi(self) -> np.ndarray:
        return self.dxi * self.m

    def index_of_frequency(self, m):
        """Array position of integer frequency ``m`` in centered order."""
        m = np.asarray(m)
        if np.any(m < -self.M // 2) or np.any(m >= self.M // 2):
            raise ValueError("frequency index outside the grid band")
        return m + self.M // 2

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "SampledFunction":
        """Sample ``func`` at the grid points."""
        return SampledFunction(self, func(self.x))

    def spectrum(self, func: Callable[[np.ndarray], np.ndarray]) -> "Spectrum":
        """Sample ``func`` at the grid frequencies."""
        return Spectrum(self, func(self.xi))

    def metadata(self) -> dict:
        return {"L": self.L, "M": self.M, "h": self.h, "dxi": self.dxi,
                "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class SampledFunction:
    """Complex samples of a function on a `Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} samples, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same_grid(self.grid, other.grid)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same_grid(self.grid, other.grid)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, c) -> "SampledFunction":
        return SampledFunction(self.grid, c * self.values)

    __rmul__ = __mul__

    def __abs__(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(frozen=True)
class Spectrum:
    """Discrete Fourier coefficients on a `Grid`, centered order."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def xi(self) -> np.ndarray:
        return self.grid.xi

    def at(self, m):
        """Coefficient(s) at integer frequency ``m``."""
        return self.coeffs[self.grid.index_of_frequency(m)]

    def __mul__(self, c) -> "Spectrum":
        return Spectrum(self.grid, c * self.coeffs)

    __rmul__ = __mul__


def _check_same_grid(g1: Grid, g2: Grid) -> None:
    if g1 != g2:
        raise ValueError(f"grid mismatch: {g1} vs {g2}")


def _signs(M: int) -> np.ndarray:
    # (-1)^m for m = -M/2 .. M/2-1
    return np.where(np.arange(-M // 2, M // 2) % 2 == 0, 1.0, -1.0)


def forward_transform(f: SampledFunction) -> Spectrum:
    """Discrete version of ``(2 pi)^-1 int f(y) exp(-i y xi) dy`` on the grid.

    Parameters
    ----------
    f : SampledFunction
        Finite samples.

    Returns
    -------
    Spectrum
        ``coeffs[m] = (h / 2 pi) sum_k f(x_k) exp(-i x_k xi_m)``.
    """
    vals = f.values
    if not np.all(np.isfinite(vals)):
        bad = int(np.count_nonzero(~np.isfinite(vals)))
        raise ValueError(f"forward_transform: {bad} non-finite sample(s) in input")
    g = f.grid
    coeffs = np.fft.fftshift(np.fft.fft(vals)) * _signs(g.M) * (g.h / (2.0 * np.pi))
    return Spectrum(g, coeffs)


def inverse_transform(F: Spectrum, grid: Grid | None = None) -> SampledFunction:
    """Discrete version of ``int exp(i x xi) F(xi) d xi``; exact inverse of `forward_transform`."""
    g = F.grid
    if grid is not None:
        _check_same_grid(grid, g)
    c = F.coeffs
    if not np.all(np.isfinite(c)):
        raise ValueError("inverse_transform: non-finite coefficients")
    vals = np.fft.ifft(np.fft.ifftshift(c * _signs(g.M))) * (g.dxi * g.M)
    return SampledFunction(g, vals)


def lp_norm(f: SampledFunction, p: float) -> float:
    """Discrete ``L^p`` norm ``(h sum |f|^p)^(1/p)``; ``p = inf`` gives the max."""
    if not p >= 1:
        raise ValueError(f"lp_norm requires p >= 1, got {p}")
    a = np.abs(f.values)
    if not np.all(np.isfinite(a)):
        raise ValueError("lp_norm: non-finite samples")
    if np.isinf(p):
        return float(a.max(initial=0.0))
    scale = a.max(initial=0.0)
    if scale == 0.0:
        return 0.0
    # scale first so that large p does not overflow
    return float(scale * (f.grid.h * np.sum((a / scale) ** p)) ** (1.0 / p))


def weak_l1_quasinorm(f: SampledFunction) -> float:
    """``sup_lambda lambda |{|f| > lambda}|`` on the grid.

    The supremum is attained as ``lambda`` increases to one of the sampled
    levels ``|f(x_k)|``: for ``lambda`` just below the k-th largest value the
    level set contains every sample ``>= |f(x_k)|``, so ties are counted in.
    """
    a = np.abs(np.asarray(f.values))
    if not np.all(np.isfinite(a)):
        raise ValueError("weak_l1_quasinorm: non-finite samples")
    v = np.sort(a)[::-1]
    if v.size == 0 or v[0] == 0.0:
        return 0.0
    # count of samples >= v[i], ties included
    counts = np.searchsorted(-v, -v, side="right")
    return float(np.max(v * counts) * f.grid.h)


def direct_apply_oracle(a, f: SampledFunction, block: int = 256) -> SampledFunction:
    """Brute-force ``T_a f(x_k) = dxi sum_m a(x_k, xi_m) fhat(xi_m) exp(i x_k xi_m)``.

    ``a`` is any callable ``a(x, xi)`` broadcasting over numpy arrays (a
    `endpoint_lab.symbols.Symbol` qualifies).  Cost is ``O(M^2)``; rows are
    processed in blocks to bound memory.
    """
    g = f.grid
    sym_grid = getattr(a, "grid", None)
    if sym_grid is not None and sym_grid != g:
        raise ValueError(f"grid mismatch between symbol ({sym_grid}) and input ({g})")
    fh = forward_transform(f).coeffs
    xi = g.xi
    x = g.x
    out = np.empty(g.M, dtype=complex)
    for start in range(0, g.M, block):
        xb = x[start:start + block]
        vals = np.asarray(a(xb[:, None], xi[None, :]), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise ValueError("direct_apply_oracle: non-finite symbol values")
        phase = np.exp(1j * np.outer(xb, xi))
        out[start:start + block] = g.dxi * ((vals * phase) @ fh)
    return SampledFunction(g, out)
