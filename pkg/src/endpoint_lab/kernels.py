"""Kernel of the oscillatory counterexample symbol and the quadrature helpers it needs.

For ``0 <= rho < 1`` the symbol

    a(x, xi) = int |u|^-1 (1 - Psi0(u)) Phi0(|u|^-rho (xi - u)) exp(-i x u) du

has, under the transform convention of `endpoint_lab.grid`, the kernel

    k(x, y) = int exp(-i y u) |u|^(rho-1) (1 - Psi0(u)) Psi0(|u|^rho (y - x)) du
            = 2 int_{2/3}^inf cos(|y| u) u^(rho-1) (1 - Psi0(u)) Psi0(u^rho |y-x|) du,

so that ``T_a f(x) = int k(x, y) f(y) dy`` and
``a(x, xi) = exp(-i x xi) int k(x, y) exp(i y xi) dy``.  Only the compactly
supported cutoff Psi0 enters, which is why every numerical route for this
symbol goes through ``k``: the spatial profile Phi0 has slowly decaying
tails that make the defining u-integral impractical to truncate.

``k`` vanishes for ``|x - y| >= (3/4)(3/2)^rho``.

For ``rho = 0`` the cutoff factor no longer depends on u and
``k(x, y) = Psi0(y - x) K(y)`` with the cosine-integral closed form
``K(y) = 2 [int_{2/3}^{3/4} cos(yu) (1-Psi0(u)) / u du - Ci(3|y|/4)]``.

For ``0 < rho < 1`` the u-axis splits into the inner transition
``[2/3, 3/4]`` (Gauss-Legendre), a plateau ``[3/4, U1]`` integrated in closed
form through the oscillatory incomplete gamma function, and the outer
transition ``[U1, U2]`` where ``Psi0(u^rho d)`` falls from 1 to 0.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import sici

from .littlewood_paley import INNER, OUTER, psi0

__all__ = [
    "osc_power_integral",
    "big_k",
    "big_k_primitive",
    "kernel_rho0_values",
    "kernel_general_values",
    "kernel_values",
    "support_radius",
    "gauss_panels",
    "graded_panels",
]

_SERIES_MAX = 6.0
_CF_ITERS = 400

_GL16 = np.polynomial.legendre.leggauss(16)
_GL64 = np.polynomial.legendre.leggauss(64)
_GL320 = np.polynomial.legendre.leggauss(320)


# ---------------------------------------------------------------------------
# oscillatory incomplete gamma function

def _lower_series(rho: float, S: np.ndarray) -> np.ndarray:
    """E(S) = int_0^S s^(rho-1) exp(-is) ds by its power series (S <= 6)."""
    S = np.asarray(S, dtype=float)
    out = np.zeros(S.shape, dtype=complex)
    term = np.ones(S.shape, dtype=complex)  # (-iS)^n / n!
    for n in range(80):
        out += term / (n + rho)
        term = term * (-1j * S) / (n + 1)
    return out * S ** rho


def _upper_cf(rho: float, S: np.ndarray) -> np.ndarray:
    """Gamma(rho, iS) by the Legendre continued fraction (modified Lentz), S >= 6."""
    z = 1j * np.asarray(S, dtype=float)
    tiny = 1e-300
    b = z + 1.0 - rho
    c = np.full(z.shape, 1.0 / tiny, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    done = np.zeros(z.shape, dtype=bool)
    for i in range(1, _CF_ITERS):
        an = -i * (i - rho)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        # freeze converged entries so that rounding jitter cannot reopen them
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < 1e-15
        if np.all(done):
            break
    else:  # pragma: no cover - only reachable for S far below the switch point
        raise RuntimeError("continued fraction for the incomplete gamma function did not converge")
    return np.exp(-z + rho * np.log(z)) * h


def _upper(rho: float, S: np.ndarray) -> np.ndarray:
    """Q(S) = int_S^inf s^(rho-1) exp(-is) ds for S > 0 (0 < rho < 1)."""
    S = np.asarray(S, dtype=float)
    out = np.zeros(S.shape, dtype=complex)
    big = S >= _SERIES_MAX
    if np.any(big):
        out[big] = np.exp(-0.5j * np.pi * rho) * _upper_cf(rho, S[big])
    small = (~big) & np.isfinite(S)
    if np.any(small):
        out[small] = _gamma(rho) * np.exp(-0.5j * np.pi * rho) - _lower_series(rho, S[small])
    return out


def osc_power_integral(rho: float, A, B):
    """``int_A^B s^(rho-1) exp(-is) ds`` for ``0 <= A <= B <= inf`` and ``0 < rho < 1``.

    Short ranges near the origin use the power series directly so that the
    constant ``Gamma(rho) exp(-i pi rho / 2)`` never cancels.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("osc_power_integral needs 0 < rho < 1")
    A, B = np.broadcast_arrays(np.asarray(A, dtype=float), np.asarray(B, dtype=float))
    out = np.zeros(A.shape, dtype=complex)
    both_small = B < _SERIES_MAX
    if np.any(both_small):
        out[both_small] = _lower_series(rho, B[both_small]) - _lower_series(rho, A[both_small])
    rest = ~both_small
    if np.any(rest):
        a = A[rest]
        b = B[rest]
        qa = np.where(a > 0, _upper(rho, np.where(a > 0, a, 1.0)),
                      _gamma(rho) * np.exp(-0.5j * np.pi * rho))
        qb = np.where(np.isinf(b), 0.0, _upper(rho, np.where(np.isinf(b), 1.0, b)))
        out[rest] = qa - qb
    return out


def _cos_power(rho: float, y, a, b):
    """``int_a^b cos(y u) u^(rho-1) du`` for ``y >= 0``, ``0 < a <= b <= inf``."""
    y, a, b = np.broadcast_arrays(np.asarray(y, float), np.asarray(a, float), np.asarray(b, float))
    out = np.empty(y.shape)
    zero = y == 0
    if np.any(zero):
        bz = b[zero]
        if np.any(np.isinf(bz)):
            raise ValueError("divergent integral: y = 0 with infinite upper limit")
        out[zero] = (bz ** rho - a[zero] ** rho) / rho
    nz = ~zero
    if np.any(nz):
        yy = y[nz]
        out[nz] = yy ** -rho * np.real(osc_power_integral(rho, yy * a[nz], yy * b[nz]))
    return out


# ---------------------------------------------------------------------------
# rho = 0

def _inner_band_nodes(n=64):
    x, w = np.polynomial.legendre.leggauss(n)
    u = INNER + 0.5 * (OUTER - INNER) * (x + 1.0)
    return u, 0.5 * (OUTER - INNER) * w * (1.0 - psi0(u))


_U_IN, _W_IN = _inner_band_nodes()


def big_k(y):
    """``K(y) = 2 int_{2/3}^inf cos(y u) u^-1 (1 - Psi0(u)) du`` (real, even, log-singular at 0)."""
    y = np.abs(np.asarray(y, dtype=float))
    if np.any(y == 0):
        raise ValueError("K(y) is logarithmically singular at y = 0")
    band = np.cos(np.multiply.outer(y, _U_IN)) @ (_W_IN / _U_IN)
    ci = sici(OUTER * y)[1]
    return 2.0 * (band - ci)


def big_k_primitive(Y):
    """``int_0^Y K(y) dy`` (odd in Y); uses ``int Ci(cy) dy = y Ci(cy) - sin(cy)/c``."""
    Y = np.asarray(Y, dtype=float)
    a = np.abs(Y)
    band = np.sin(np.multiply.outer(a, _U_IN)) @ (_W_IN / _U_IN ** 2)
    with np.errstate(invalid="ignore"):
        ci = np.where(a > 0, a * sici(np.where(a > 0, OUTER * a, 1.0))[1], 0.0)
    tail = ci - np.sin(OUTER * a) / OUTER
    return np.sign(Y) * 2.0 * (band - tail)


def kernel_rho0_values(x, y):
    """``k(x, y) = Psi0(y - x) K(y)`` for the rho = 0 symbol."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    out = np.zeros(x.shape)
    live = np.abs(y - x) < OUTER
    if np.any(live):
        out[live] = psi0(y[live] - x[live]) * big_k(y[live])
    return out


# ---------------------------------------------------------------------------
# 0 < rho < 1

# Beyond this many radians of oscillation across the outer transition band the
# smooth switch-off contributes below double precision (checked in the tests).
_OSC_THRESHOLD = 1500.0


def support_radius(rho: float) -> float:
    """``k(x, y) = 0`` once ``|x - y| >= (3/4)(3/2)^rho``."""
    return OUTER * (1.0 / INNER) ** rho


def _inner_band(rho, yy):
    u, w = _U_IN, _W_IN * _U_IN ** (rho - 1.0)
    return np.cos(np.multiply.outer(yy, u)) @ w


def _outer_band_nodes(rho, panels):
    v, w = gauss_panels(np.linspace(INNER, OUTER, panels + 1), 64)
    return v, w * psi0(v) / (rho * v)


def _outer_band(rho, yy, d):
    """``int_{U1}^{U2} cos(yy u) u^(rho-1) Psi0(u^rho d) du`` via ``v = u^rho d``.

    The band is split into Gauss panels so that each panel spans at most
    about 80 radians of ``yy u``; points are bucketed by a power-of-two panel
    count so that the work stays vectorised.
    """
    U1 = (INNER / d) ** (1.0 / rho)
    U2 = (OUTER / d) ** (1.0 / rho)
    need = np.maximum(2.0, np.ceil(yy * (U2 - U1) / 80.0))
    panels = 2 ** np.ceil(np.log2(need)).astype(int)
    out = np.empty(yy.shape)
    step = 1 << 18
    for p in np.unique(panels):
        idx = np.flatnonzero(panels == p)
        v, wv = _outer_band_nodes(rho, int(p))
        chunk = max(1, step // v.size)
        for s in range(0, idx.size, chunk):
            sel = idx[s:s + chunk]
            u = (v[None, :] / d[sel, None]) ** (1.0 / rho)
            out[sel] = (np.cos(yy[sel, None] * u) * u ** rho) @ wv
    return out


def _far_band(rho, yy, d):
    """Full integral when the two transitions overlap (U1 < 3/4): bounded u-range.

    Panels end at every point where one of the two cutoffs starts or stops
    moving (2/3, U1, 3/4, U2), so that the integrand is analytic inside each
    panel and a 64-point rule per panel reaches double precision.
    """
    U1 = np.maximum((INNER / d) ** (1.0 / rho), INNER)
    U2 = (OUTER / d) ** (1.0 / rho)
    edges = np.stack([np.full(d.shape, INNER), np.minimum(U1, OUTER),
                      np.minimum(U2, OUTER), np.maximum(U2, OUTER)], axis=1)
    edges[:, 2] = np.maximum(edges[:, 2], edges[:, 1])
    x, w = _GL64
    out = np.zeros(yy.shape)
    step = 8192
    for s in range(0, yy.size, step):
        ys = yy[s:s + step, None]
        ds = d[s:s + step, None]
        for p in range(3):
            lo = edges[s:s + step, p:p + 1]
            hi = edges[s:s + step, p + 1:p + 2]
            live = hi[:, 0] > lo[:, 0]
            if not np.any(live):
                continue
            lo, hi = lo[live], hi[live]
            u = lo + 0.5 * (hi - lo) * (x + 1.0)
            f = np.cos(ys[live] * u) * u ** (rho - 1.0) * psi0(u ** rho * ds[live])
            if p < 2:
                f = f * (1.0 - psi0(u))
            out[s:s + step][live] += np.sum(0.5 * (hi - lo) * w * f, axis=1)
    return out


def kernel_general_values(rho: float, x, y):
    """``k(x, y)`` for ``0 < rho < 1`` (real-valued; infinite only at x = y = 0)."""
    if not 0.0 < rho < 1.0:
        raise ValueError("kernel_general_values needs 0 < rho < 1")
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    shape = x.shape
    yy = np.abs(y).ravel()
    d = np.abs(y - x).ravel()
    out = np.zeros(yy.shape)
    with np.errstate(divide="ignore"):
        U1 = np.where(d > 0, (INNER / np.where(d > 0, d, 1.0)) ** (1.0 / rho), np.inf)
        U2 = np.where(d > 0, (OUTER / np.where(d > 0, d, 1.0)) ** (1.0 / rho), np.inf)
    live = U2 > INNER
    near = live & (U1 >= OUTER)
    far = live & ~near

    if np.any(far):
        out[far] = 2.0 * _far_band(rho, yy[far], d[far])

    if np.any(near):
        yn, dn, u1, u2 = yy[near], d[near], U1[near], U2[near]
        sing = (yn == 0) & np.isinf(u1)
        if np.any(sing):
            # k(0, 0): the integral diverges
            res = np.full(yn.shape, np.inf)
            ok = ~sing
        else:
            res = np.empty(yn.shape)
            ok = np.ones(yn.shape, bool)
        yo, do, u1o, u2o = yn[ok], dn[ok], u1[ok], u2[ok]
        inner = _inner_band(rho, yo)
        diag = np.isinf(u1o)
        with np.errstate(invalid="ignore"):
            width_osc = np.where(diag, np.inf, yo * (u2o - u1o))
        smooth_off = width_osc > _OSC_THRESHOLD
        # plateau up to U1, and past U1 either the exact band or its
        # closed-form limit when the switch-off is many oscillations wide
        upper = np.where(smooth_off, np.inf, u1o)
        plateau = _cos_power(rho, yo, np.full(yo.shape, OUTER), upper)
        band = np.zeros(yo.shape)
        need = ~smooth_off
        if np.any(need):
            band[need] = _outer_band(rho, yo[need], do[need])
        res[ok] = 2.0 * (inner + plateau + band)
        out[near] = res
    return out.reshape(shape)


def kernel_values(rho: float, x, y):
    """Dispatch to the rho = 0 closed form or the general route."""
    if rho == 0:
        return kernel_rho0_values(x, y)
    return kernel_general_values(rho, x, y)


# ---------------------------------------------------------------------------
# quadrature helpers

def gauss_panels(breaks, n: int = 16):
    """Gauss-Legendre nodes/weights on consecutive panels ``[breaks[i], breaks[i+1]]``."""
    breaks = np.asarray(breaks, dtype=float)
    if n == 16:
        x, w = _GL16
    elif n == 64:
        x, w = _GL64
    else:
        x, w = np.polynomial.legendre.leggauss(n)
    a = breaks[:-1, None]
    b = breaks[1:, None]
    keep = (b - a)[:, 0] > 0
    a, b = a[keep], b[keep]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
    wts = 0.5 * (b - a) * w
    return nodes.ravel(), wts.ravel()


def graded_panels(s: float, end: float, ratio: float = 0.15, floor: float = 1e-22):
    """Break points between ``end`` and a singular point ``s``, geometrically graded toward ``s``.

    Returned in increasing order of distance from ``end`` so that consecutive
    pairs, once sorted, form the panels.
    """
    length = abs(end - s)
    if length == 0:
        return np.array([s])
    n = max(1, int(math.ceil(math.log(floor) / math.log(ratio))))
    dist = length * ratio ** np.arange(n + 1)
    return np.concatenate([[s], s + np.sign(end - s) * dist[::-1]])
