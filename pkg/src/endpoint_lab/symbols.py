"""Symbols ``a(x, xi)``: the abstraction, the three constructions and a class checker.

Three constructions live here:

* `symbol_A` -- the oscillatory symbol of order ``rho - 1`` built from
  ``Phi0(|u|^-rho (xi - u))``.  It is evaluated through its compactly
  supported kernel (see `endpoint_lab.kernels`), never through the defining
  u-integral.
* `symbol_B` -- the lacunary symbol ``sum_j exp(-i 2^j x) Psi0(2^(1-j)(xi - 2^j))``
  of class ``S^0_{1,1}``.
* `symbol_C` -- the lacunary double sum of class ``S^{-1/p}_{0,1}``.

B and C are `LacunarySymbol` instances: finite sums of blocks
``c_b exp(-i w_b x) Psi0((xi - s_b) / t_b)``, which `endpoint_lab.operator`
applies by shifting the windowed spectrum (one inverse FFT in total).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .grid import Grid
from .littlewood_paley import INNER, OUTER, PartitionOfUnity, psi0, smooth_step

__all__ = [
    "ClassParams",
    "Symbol",
    "LacunarySymbol",
    "OscillatorySymbol",
    "identity_symbol",
    "multiplier_symbol",
    "reference_symbol",
    "symbol_A",
    "symbol_B",
    "symbol_C",
    "SeminormReport",
    "check_symbol_class",
    "CSV_SCHEMA_VERSION",
]

CSV_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ClassParams:
    """Hoermander class parameters ``S^m_{rho,delta}`` (``rough``: no x-derivative claims)."""

    m: float
    rho: float
    delta: float
    rough: bool = False

    def __post_init__(self):
        for name in ("rho", "delta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_tuple(self):
        return (self.m, self.rho, self.delta)


class Symbol:
    """An evaluatable ``a(x, xi)`` with declared class parameters.

    Parameters
    ----------
    evaluator : callable
        ``evaluator(x, xi)`` broadcasting over numpy arrays.
    declared : ClassParams
        Class the construction is claimed to belong to.
    band_limit : float, optional
        Largest ``|xi|`` at which the symbol is nonzero (``None``: not band limited).
    grid : Grid, optional
        Grid the symbol was built for.
    x_independent : bool
        True for Fourier multipliers; `endpoint_lab.operator.apply` then uses one FFT.
    """

    def __init__(self, evaluator: Callable, declared: ClassParams, band_limit: Optional[float] = None,
                 grid: Optional[Grid] = None, name: str = "symbol", x_independent: bool = False):
        self._evaluator = evaluator
        self.declared = declared
        self.band_limit = band_limit
        self.grid = grid
        self.name = name
        self.x_independent = x_independent

    def __call__(self, x, xi):
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        vals = np.asarray(self._evaluator(x, xi), dtype=complex)
        vals = np.broadcast_to(vals, x.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.name}: non-finite symbol values")
        return vals

    def rows(self, x, grid: Grid) -> np.ndarray:
        """``a(x_i, xi_m)`` for the given ``x`` values and all grid frequencies."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self(x[:, None], grid.xi[None, :])

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, declared={self.declared.as_tuple()})"


def identity_symbol() -> Symbol:
    """``a == 1``; ``T_a`` is the identity."""
    return Symbol(lambda x, xi: np.ones(np.broadcast(x, xi).shape), ClassParams(0.0, 1.0, 0.0),
                  name="identity", x_independent=True)


def multiplier_symbol(func: Callable, declared: ClassParams, name: str = "multiplier",
                      band_limit: Optional[float] = None) -> Symbol:
    """x-independent symbol ``a(x, xi) = func(xi)``."""
    return Symbol(lambda x, xi: np.broadcast_to(func(xi), np.broadcast(x, xi).shape),
                  declared, band_limit=band_limit, name=name, x_independent=True)


def reference_symbol(m: float) -> Symbol:
    """``(1 + xi^2)^(m/2)``, a textbook member of ``S^m_{1,0}``."""
    return multiplier_symbol(lambda xi: (1.0 + xi * xi) ** (0.5 * m), ClassParams(m, 1.0, 0.0),
                             name=f"reference(m={m:g})")


# ---------------------------------------------------------------------------
# lacunary symbols


class LacunarySymbol(Symbol):
    """Finite sum of blocks ``coef_b exp(-i omega_b x) Psi0((xi - center_b) / scale_b)``.

    Block b is supported in ``|xi - center_b| < (3/4) scale_b``.
    """

    def __init__(self, coef, omega, center, scale, declared: ClassParams, grid: Optional[Grid] = None,
                 name: str = "lacunary", cutoff: Callable = psi0):
        coef = np.asarray(coef, dtype=complex)
        omega = np.asarray(omega, dtype=float)
        center = np.asarray(center, dtype=float)
        scale = np.asarray(scale, dtype=float)
        if not (coef.shape == omega.shape == center.shape == scale.shape and coef.ndim == 1):
            raise ValueError("block arrays must be one-dimensional and of equal length")
        if np.any(scale <= 0):
            raise ValueError("block scales must be positive")
        order = np.argsort(center - OUTER * scale, kind="stable")
        self.coef, self.omega = coef[order], omega[order]
        self.center, self.scale = center[order], scale[order]
        self.lo = self.center - OUTER * self.scale
        self.hi = self.center + OUTER * self.scale
        self._cutoff = cutoff
        # with both edge sequences sorted, the active blocks at any xi form a
        # contiguous run; record its maximal length
        self._monotone = bool(np.all(np.diff(self.hi) >= 0))
        if self._monotone and self.lo.size:
            first = np.searchsorted(self.hi, self.lo, side="right")
            self._depth = int(np.max(np.arange(self.lo.size) - first + 1))
        else:
            self._depth = self.lo.size
        band = float(np.max(np.abs(np.concatenate([self.lo, self.hi])))) if self.lo.size else 0.0
        super().__init__(self._evaluate, declared, band_limit=band, grid=grid, name=name)

    @property
    def n_blocks(self) -> int:
        return int(self.coef.size)

    def _evaluate(self, x, xi):
        out = np.zeros(x.shape, dtype=complex)
        if not self.coef.size:
            return out
        if not self._monotone:
            for b in range(self.coef.size):
                live = np.abs(xi - self.center[b]) < OUTER * self.scale[b]
                if np.any(live):
                    out[live] += (self.coef[b] * np.exp(-1j * self.omega[b] * x[live])
                                  * self._cutoff((xi[live] - self.center[b]) / self.scale[b]))
            return out
        first = np.searchsorted(self.hi, xi, side="right")
        last = np.searchsorted(self.lo, xi, side="left") - 1
        for d in range(self._depth):
            b = first + d
            live = b <= last
            if not np.any(live):
                continue
            bl = b[live]
            out[live] += (self.coef[bl] * np.exp(-1j * self.omega[bl] * x[live])
                          * self._cutoff((xi[live] - self.center[bl]) / self.scale[bl]))
        return out

    def grid_blocks(self, grid: Grid):
        """Flattened per-block grid support: (block id, frequency index m, window value).

        Only grid frequencies strictly inside each block support are listed.
        """
        dxi = grid.dxi
        m_lo = np.floor(self.lo / dxi).astype(np.int64) + 1
        m_hi = np.ceil(self.hi / dxi).astype(np.int64) - 1
        m_lo = np.maximum(m_lo, -grid.M // 2)
        m_hi = np.minimum(m_hi, grid.M // 2 - 1)
        counts = np.maximum(m_hi - m_lo + 1, 0)
        block = np.repeat(np.arange(self.coef.size), counts)
        start = np.repeat(np.cumsum(counts) - counts, counts)
        m = np.repeat(m_lo, counts) + (np.arange(int(counts.sum())) - start)
        win = self._cutoff((m * dxi - self.center[block]) / self.scale[block])
        return block, m, win

    def modulation_shifts(self, grid: Grid):
        """Integer frequency shifts ``omega_b / dxi``, or None if some are not integers."""
        s = self.omega / grid.dxi
        r = np.rint(s)
        if np.all(np.abs(s - r) <= 1e-9 * np.maximum(1.0, np.abs(s))):
            return r.astype(np.int64)
        return None


def _check_partition(grid: Grid, P: Optional[PartitionOfUnity]):
    if P is not None and P.grid != grid:
        raise ValueError("partition of unity was built on a different grid")
    return psi0 if P is None else P.psi0


def symbol_B(grid: Grid, P: Optional[PartitionOfUnity] = None, j_max: Optional[int] = None) -> LacunarySymbol:
    """``sum_{j=2}^{j_max} exp(-i 2^j x) Psi0(2^(1-j) (xi - 2^j))``, declared ``S^0_{1,1}``.

    Term j is supported in ``(5/8) 2^j < xi < (11/8) 2^j``; neighbouring
    terms overlap on ``(5/4) 2^j < xi < (11/8) 2^j``.  The default ``j_max``
    is the largest j whose support fits in the band, capped at 12.
    """
    cutoff = _check_partition(grid, P)
    fit = int(math.floor(math.log2(grid.bandwidth / 1.375)))
    if j_max is None:
        j_max = min(12, fit)
    if j_max > fit:
        raise ValueError(f"j_max={j_max} needs bandwidth {1.375 * 2.0 ** j_max:.4g}, grid has {grid.bandwidth:.4g}")
    if j_max < 4:
        raise ValueError(f"bandwidth {grid.bandwidth:.4g} too small: symbol B needs j_max >= 4 (bandwidth >= 22)")
    j = np.arange(2, j_max + 1)
    p2 = np.ldexp(1.0, j)
    sym = LacunarySymbol(np.ones(j.size), p2, p2, 0.5 * p2, ClassParams(0.0, 1.0, 1.0),
                         grid=grid, name=f"B(j_max={j_max})", cutoff=cutoff)
    sym.j_max = j_max
    return sym


def symbol_C_blocks(p: float, j_max: int):
    """Levels, integers k and coefficients of the double sum defining symbol C."""
    levels, ks = [], []
    for j in range(2, j_max + 1):
        lo, hi = 7 * 2 ** j / 8, 9 * 2 ** j / 8
        kpos = np.arange(int(math.floor(lo)) + 1, int(math.ceil(hi)))
        kpos = kpos[(kpos > lo) & (kpos < hi)]
        k = np.concatenate([-kpos[::-1], kpos])
        ks.append(k)
        levels.append(np.full(k.size, j))
    levels = np.concatenate(levels)
    ks = np.concatenate(ks)
    return levels, ks, 2.0 ** (-levels / p)


def symbol_C(p: float, grid: Grid, P: Optional[PartitionOfUnity] = None,
             j_max: Optional[int] = None) -> LacunarySymbol:
    """``sum_j 2^(-j/p) sum_{(7/8)2^j < |k| < (9/8)2^j} exp(-4ikx) Psi0((xi - 4k)/4)``.

    Declared ``S^{-1/p}_{0,1}``.  Blocks have support ``|xi - 4k| < 3``, so
    consecutive k overlap.  The default ``j_max`` is the largest level whose
    blocks fit in the band, capped at 10.
    """
    if not 1.0 < p < math.inf:
        raise ValueError(f"symbol C needs 1 < p < inf, got {p}")
    cutoff = _check_partition(grid, P)
    fit = 1
    while 4.0 * _kmax(fit + 1) + 3.0 <= grid.bandwidth:
        fit += 1
    if j_max is None:
        j_max = min(10, fit)
    if j_max > fit or j_max < 4:
        raise ValueError(
            f"symbol C with j_max={j_max} needs bandwidth >= {4.0 * _kmax(max(j_max, 4)) + 3.0:.6g} "
            f"(grid has {grid.bandwidth:.6g}; j_max must be >= 4)")
    levels, k, c = symbol_C_blocks(p, j_max)
    sym = LacunarySymbol(c, 4.0 * k, 4.0 * k, np.full(k.size, 4.0), ClassParams(-1.0 / p, 0.0, 1.0),
                         grid=grid, name=f"C(p={p:g}, j_max={j_max})", cutoff=cutoff)
    sym.j_max = j_max
    sym.p = p
    return sym


def _kmax(j: int) -> int:
    """Largest integer k with k < (9/8) 2^j."""
    return int(math.ceil(9 * 2 ** j / 8)) - 1


# ---------------------------------------------------------------------------
# the oscillatory symbol


def _near_cutoff(y, delta):
    """1 on ``|y| <= delta/4``, 0 on ``|y| >= delta``: splits off the singular point y = 0."""
    return 1.0 - smooth_step((np.abs(y) / delta - 0.25) / 0.75)


class OscillatorySymbol(Symbol):
    """The symbol of order ``rho - 1`` evaluated through its kernel.

    ``a(x, xi) = int k(x, x + t) exp(i t xi) dt`` over ``|t| < support_radius``.
    Pointwise values use Gauss-Legendre panels graded toward the singular
    point ``y = 0`` (and toward ``y = x``); `rows` evaluates whole grid rows
    by splitting ``k`` with a smooth cutoff around ``y = 0``: the smooth far
    part is summed by an oversampled trapezoid rule and an FFT, the near
    part by Gauss-Legendre panels and a matrix product.
    """

    def __init__(self, rho: float, grid: Optional[Grid] = None, near_radius: float = 0.125,
                 oversample: int = 2):
        if not 0.0 <= rho < 1.0:
            raise ValueError(f"symbol A is defined for 0 <= rho < 1, got rho={rho}")
        self.rho = float(rho)
        self.radius = OUTER if rho == 0 else kernels.support_radius(rho)
        self.near_radius = float(near_radius)
        self.oversample = int(oversample)
        super().__init__(self._evaluate, ClassParams(rho - 1.0, rho, 1.0), grid=grid,
                         name=f"A(rho={rho:g})")

    def kernel(self, x, y):
        """``k(x, y)`` (real)."""
        return kernels.kernel_values(self.rho, x, y)

    # --- pointwise ---------------------------------------------------------

    def _breaks(self, x: float, panel: float):
        """Panel breaks in y for the row x: graded toward y = 0 and y = x."""
        R = self.radius
        if self.rho == 0:
            offsets = [0.0, INNER, OUTER]
        else:
            r = self.rho
            offsets = [0.0, R, INNER / OUTER ** r, INNER / INNER ** r, OUTER / OUTER ** r]
        pts = [x - c for c in offsets] + [x + c for c in offsets]
        sing = [0.0] if abs(x) < R else []
        pts = np.unique(np.array(pts + sing))
        centres = sing + ([x] if self.rho > 0 and x not in sing else [])
        graded = []
        for c in centres:
            left = pts[pts < c]
            right = pts[pts > c]
            if left.size:
                graded.append(kernels.graded_panels(c, left.max()))
            if right.size:
                graded.append(kernels.graded_panels(c, right.min()))
        if self.rho > 0:
            graded.append(self._chirp_breaks(x))
        b = np.unique(np.concatenate([pts] + graded))
        out = [b[:1]]
        for lo, hi in zip(b[:-1], b[1:]):
            n = max(1, int(math.ceil((hi - lo) / panel)))
            out.append(np.linspace(lo, hi, n + 1)[1:])
        return np.concatenate(out)

    def _chirp_breaks(self, x: float, yw_stop: float = 600.0, max_steps: int = 50000):
        """Breaks resolving the chirp of ``k(x, .)`` near ``y = x``.

        For small ``d = |y - x|`` the switch-off ``Psi0(u^rho d)`` happens at
        ``u ~ d^(-1/rho)``, which makes ``k`` oscillate in d with local
        frequency about ``|y| U2(d) / (rho d)``.  Once the switch-off band
        spans more than ``yw_stop`` radians the oscillation amplitude is
        below 1e-9 of the plateau scale and the march stops.
        """
        r = self.rho
        ax = abs(x)
        cw = OUTER ** (1.0 / r) - INNER ** (1.0 / r)
        d = INNER / OUTER ** r
        ds = [d]
        for _ in range(max_steps):
            u2 = (OUTER / d) ** (1.0 / r)
            ylo = ax - d if ax > 0 else d
            if d <= 0.5 * ax or ax == 0:
                if ylo * cw * d ** (-1.0 / r) > yw_stop:
                    break
            d -= min(4.0 * r * d / ((ax + d) * u2), 0.1 * d)
            if d <= 0:
                break
            ds.append(d)
        ds = np.array(ds)
        return np.concatenate([x - ds, x + ds])

    def _evaluate(self, x, xi, refine: int = 1):
        out = np.empty(x.shape, dtype=complex)
        xf, xif = x.ravel(), xi.ravel()
        flat = out.reshape(-1)
        for xv in np.unique(xf):
            sel = np.flatnonzero(xf == xv)
            xs = xif[sel]
            wmax = float(np.max(np.abs(xs), initial=0.0))
            panel = min(0.05, 8.0 / max(wmax, 1.0)) / refine
            y, w = kernels.gauss_panels(self._breaks(float(xv), panel), 16)
            kv = w * self.kernel(xv, y)
            t = y - xv
            flat[sel] = _nudft(kv[None, :], t, xs)[0]
        return out

    def evaluate(self, x, xi, refine: int = 1):
        """Pointwise values with panels ``refine`` times shorter (self-consistency checks)."""
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        return self._evaluate(x, xi, refine=refine)

    # --- whole grid rows -----------------------------------------------------

    def rows(self, x, grid: Grid, chunk: int = 256) -> np.ndarray:
        """``a(x_i, xi_m)`` for all grid frequencies (``len(x)`` by ``M``)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        M, L, xi = grid.M, grid.L, grid.xi
        p = self.oversample
        dlt = self.near_radius
        while grid.h / p > 0.75 * dlt / 16 or grid.h / p > 0.005:
            p *= 2
        hq = grid.h / p
        Mq = p * M
        R = self.radius
        nwin = int(math.ceil(R / hq)) + 1
        offs = np.arange(-nwin, nwin + 1)
        signs = np.where(np.arange(-M // 2, M // 2) % 2 == 0, 1.0, -1.0)
        mpos = np.arange(-M // 2, M // 2) % Mq
        out = np.empty((x.size, M), dtype=complex)

        # near part: common nodes for rows whose singular points stay clear of
        # the cutoff support, own graded nodes otherwise
        panel = min(dlt / 8, 8.0 / grid.bandwidth)
        common_b = np.unique(np.concatenate([
            kernels.graded_panels(0.0, -dlt), kernels.graded_panels(0.0, dlt),
            np.linspace(-dlt, dlt, int(math.ceil(2 * dlt / panel)) + 1)]))
        yc, wc = kernels.gauss_panels(common_b, 16)
        wc = wc * _near_cutoff(yc, dlt)

        chunk = max(1, min(chunk, (1 << 22) // Mq))
        for s in range(0, x.size, chunk):
            xs = x[s:s + chunk]
            # far part on the oversampled lattice y = -L + q hq
            q0 = np.rint((xs + L) / hq).astype(np.int64)
            q = q0[:, None] + offs[None, :]
            yq = -L + q * hq
            wq = 1.0 - _near_cutoff(((yq + L) % (2 * L)) - L, dlt)
            live = (wq > 0) & (np.abs(yq - xs[:, None]) < R)
            g = np.zeros(yq.shape)
            rr = np.broadcast_to(np.arange(xs.size)[:, None], yq.shape)
            g[live] = self.kernel(xs[rr[live]], yq[live]) * wq[live]
            G = np.zeros((xs.size, Mq))
            np.add.at(G, (rr, q % Mq), g)
            far = np.fft.ifft(G, axis=1)[:, mpos] * (Mq * hq) * signs
            # near part
            near = np.empty((xs.size, M), dtype=complex)
            own = np.abs(xs) < 1.1 * dlt
            if np.any(~own):
                Kc = self.kernel(xs[~own, None], yc[None, :]) * wc
                near[~own] = _nudft(Kc, yc, xi)
            for i in np.flatnonzero(own):
                xv = float(xs[i])
                br = [common_b]
                if xv != 0.0 and abs(xv) < dlt:
                    br += [kernels.graded_panels(xv, -dlt), kernels.graded_panels(xv, dlt)]
                if self.rho > 0:
                    br.append(self._chirp_breaks(xv))
                b = np.unique(np.clip(np.concatenate(br), -dlt, dlt))
                yo, wo = kernels.gauss_panels(b, 16)
                Ko = self.kernel(xv, yo) * wo * _near_cutoff(yo, dlt)
                near[i] = _nudft(Ko[None, :], yo, xi)[0]
            out[s:s + chunk] = np.exp(-1j * np.outer(xs, xi)) * (far + near)
        return out


_MOMENTS = 18


def _nudft(vals, nodes, xi, block: int = 2048):
    """``vals @ exp(i nodes xi)`` for rows ``vals`` (``R`` by ``len(nodes)``).

    Nodes are binned into cells of width ``1 / max|xi|``.  Crowded cells
    (graded and chirp panels put thousands of nodes into a few cells) are
    summed through Taylor moments about the cell centre,
    ``exp(i y xi) = exp(i c xi) sum_p (i xi)^p (y - c)^p / p!`` with
    ``|y - c| xi <= 1/2``, truncated after 18 terms (error below 1e-21);
    the remaining nodes are summed directly.
    """
    vals = np.atleast_2d(vals)
    nodes = np.asarray(nodes, dtype=float)
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((vals.shape[0], xi.size), dtype=complex)
    top = float(np.max(np.abs(xi), initial=0.0))
    if top == 0.0 or nodes.size == 0:
        return out + vals.sum(axis=1, keepdims=True)
    width = 1.0 / top
    cell = np.floor((nodes - nodes.min()) / width).astype(np.int64)
    ids, inv, counts = np.unique(cell, return_inverse=True, return_counts=True)
    crowded = counts[inv] > 2 * _MOMENTS
    direct = np.flatnonzero(~crowded)
    for s in range(0, direct.size, block):
        sel = direct[s:s + block]
        out += vals[:, sel] @ np.exp(1j * np.outer(nodes[sel], xi))
    if np.any(crowded):
        sel = np.flatnonzero(crowded)
        order = sel[np.argsort(cell[sel], kind="stable")]
        cs = cell[order]
        starts = np.flatnonzero(np.r_[True, cs[1:] != cs[:-1]])
        centre = nodes.min() + (cs[starts] + 0.5) * width
        t = nodes[order] - np.repeat(centre, np.diff(np.r_[starts, cs.size]))
        fact = np.cumprod(np.r_[1.0, np.arange(1, _MOMENTS)])
        tp = t[:, None] ** np.arange(_MOMENTS)[None, :] / fact[None, :]
        E = np.exp(1j * np.outer(centre, xi))
        powers = (1j * xi)[None, :] ** np.arange(_MOMENTS)[:, None]
        rstep = max(1, (1 << 22) // max(order.size * _MOMENTS, 1))
        for r in range(0, vals.shape[0], rstep):
            v = vals[r:r + rstep][:, order]
            mom = np.add.reduceat(v[:, :, None] * tp[None, :, :], starts, axis=1)  # R x cells x P
            for pw in range(_MOMENTS):
                out[r:r + rstep] += (mom[:, :, pw] @ E) * powers[pw][None, :]
    return out


def symbol_A(rho: float, grid: Optional[Grid] = None, P: Optional[PartitionOfUnity] = None,
             **kwargs) -> OscillatorySymbol:
    """The oscillatory symbol of class ``S^{rho-1}_{rho,1}``, ``0 <= rho < 1``."""
    if grid is not None:
        _check_partition(grid, P)
    return OscillatorySymbol(rho, grid=grid, **kwargs)


# ---------------------------------------------------------------------------
# class checker


def _fd_weights(order: int, half: int) -> np.ndarray:
    """Central finite-difference weights on offsets ``-half..half`` for the given derivative order."""
    k = np.arange(-half, half + 1, dtype=float)
    V = np.vander(k, increasing=True).T
    rhs = np.zeros(k.size)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


@dataclass
class SeminormReport:
    """Blockwise seminorm estimates and fitted growth slopes per ``(alpha, beta)``.

    ``slope`` is the least-squares slope of ``log2(seminorm)`` against the
    block index j: a value near 0 is consistent with membership, a value
    near ``s > 0`` indicates growth like ``2^(j s)``.
    """

    symbol: str
    params: ClassParams
    entries: list = field(default_factory=list)   # dicts: alpha, beta, j, seminorm
    slopes: dict = field(default_factory=dict)    # (alpha, beta) -> slope
    steps: dict = field(default_factory=dict)

    def slope(self, alpha: int, beta: int) -> float:
        return self.slopes[(alpha, beta)]

    def rows(self):
        for e in self.entries:
            yield dict(e, slope=self.slopes[(e["alpha"], e["beta"])])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# seminorm report schema v{CSV_SCHEMA_VERSION}; symbol={self.symbol}; "
                     f"class=({self.params.m:g},{self.params.rho:g},{self.params.delta:g})\n")
            w = csv.DictWriter(fh, fieldnames=["alpha", "beta", "j", "seminorm", "slope"])
            w.writeheader()
            for row in self.rows():
                w.writerow(row)

    def to_dict(self) -> dict:
        return {"symbol": self.symbol,
                "class": {"m": self.params.m, "rho": self.params.rho, "delta": self.params.delta,
                          "rough": self.params.rough},
                "entries": list(self.rows()),
                "slopes": {f"{a},{b}": s for (a, b), s in self.slopes.items()},
                "steps": self.steps}


def check_symbol_class(a: Symbol, params: ClassParams, alpha_max: int, beta_max: int,
                       grid: Grid, j_min: int = 1, j_max: Optional[int] = None,
                       n_xi: int = 256, n_x: int = 16, xi_step: float = 1.0 / 128,
                       x_step: float = 1e-3) -> SeminormReport:
    """Estimate ``sup (1+|xi|)^(-m + rho alpha - delta beta) |d_xi^alpha d_x^beta a|`` per dyadic block.

    Block j covers ``2^j <= |xi| < 2^(j+1)``.  Derivatives are fourth-order
    central differences; the xi-step is ``xi_step * 2^(j rho)`` and the
    x-step is ``min(x_step, 2^-j / 64)`` so that the x-oscillation of
    lacunary terms at the block scale stays resolved.
    """
    if alpha_max > 4 or beta_max > 4 or alpha_max < 0 or beta_max < 0:
        raise ValueError("derivative orders must lie in 0..4")
    top = grid.bandwidth if a.band_limit is None else min(grid.bandwidth, a.band_limit)
    fit = int(math.floor(math.log2(top)))
    j_max = fit if j_max is None else j_max
    if j_max > fit:
        raise ValueError(f"block j={j_max} exceeds the usable band |xi| < {top:.4g}")
    if j_max - j_min < 2:
        raise ValueError("need at least three dyadic blocks for a slope fit")
    betas = range(1) if params.rough else range(beta_max + 1)
    rng = np.random.default_rng(12345)
    xs = np.sort(rng.uniform(-grid.L, grid.L, n_x))
    report = SeminormReport(symbol=a.name, params=params)
    report.steps = {"xi_step": xi_step, "x_step": x_step, "n_xi": n_xi, "n_x": n_x}
    for j in range(j_min, j_max + 1):
        u = np.linspace(0.0, 1.0, n_xi, endpoint=False) + 0.5 / n_xi
        xi_pos = 2.0 ** j * (1.0 + u)
        xi_pts = np.concatenate([-xi_pos[::-1], xi_pos])
        dxi = xi_step * 2.0 ** (j * params.rho)
        dx = min(x_step, 2.0 ** -j / 64)
        if dxi < 1e-7 * 2.0 ** (j + 1) or dx < 1e-12:
            raise ValueError(f"finite-difference step underflow at block j={j}: "
                             f"xi-step {dxi:.3g}, x-step {dx:.3g}; increase the steps")
        for alpha in range(alpha_max + 1):
            ha = alpha // 2 + 2 if alpha else 0
            wa = _fd_weights(alpha, ha) if alpha else np.array([1.0])
            for beta in betas:
                hb = beta // 2 + 2 if beta else 0
                wb = _fd_weights(beta, hb) if beta else np.array([1.0])
                acc = np.zeros((xs.size, xi_pts.size), dtype=complex)
                for ia, ca in enumerate(wa):
                    if ca == 0:
                        continue
                    for ib, cb in enumerate(wb):
                        if cb == 0:
                            continue
                        acc += ca * cb * a(xs[:, None] + (ib - hb) * dx, xi_pts[None, :] + (ia - ha) * dxi)
                deriv = acc / (dxi ** alpha * dx ** beta)
                weight = (1.0 + np.abs(xi_pts)) ** (-params.m + params.rho * alpha - params.delta * beta)
                val = float(np.max(np.abs(deriv) * weight[None, :]))
                report.entries.append({"alpha": alpha, "beta": beta, "j": j, "seminorm": val})
    for alpha in range(alpha_max + 1):
        for beta in betas:
            js = np.array([e["j"] for e in report.entries if e["alpha"] == alpha and e["beta"] == beta])
            vs = np.array([e["seminorm"] for e in report.entries if e["alpha"] == alpha and e["beta"] == beta])
            pos = vs > 0
            if np.count_nonzero(pos) < 2:
                report.slopes[(alpha, beta)] = 0.0  # identically zero derivative
                continue
            report.slopes[(alpha, beta)] = float(np.polyfit(js[pos], np.log2(vs[pos]), 1)[0])
    return report
