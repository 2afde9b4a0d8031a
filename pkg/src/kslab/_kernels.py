"""Compiled stencil and reduction kernels.

Fields are stored as (ny, nx) float64 arrays, row-major with y outer.
Neighbour indices are clamped at the boundary, which is exactly the
mirror-ghost Neumann closure: the ghost equals the boundary cell, so the
boundary-face difference and flux vanish. The standalone operators and the
fused Euler update share the same per-cell expressions and agree bit for bit.
"""
import math

import numpy as np
from numba import njit

SOURCE_NONE = 0
SOURCE_LOGISTIC = 1
SOURCE_SUBLOGISTIC = 2

REL_SOURCE_EPS = 1e-30


@njit(cache=True)
def neumaier_sum(a):
    # Kahan-Babuska compensated summation, strictly serial.
    s = 0.0
    c = 0.0
    for x in a:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


@njit(cache=True)
def min_max(a):
    """(min, max, all finite) in one pass over a 2D array."""
    lo = np.inf
    hi = -np.inf
    finite = True
    ny, nx = a.shape
    for j in range(ny):
        for i in range(nx):
            x = a[j, i]
            if not math.isfinite(x):
                finite = False
            lo = min(lo, x)
            hi = max(hi, x)
    return lo, hi, finite


@njit(cache=True, inline="always")
def source_value(kind, r, mu, p, u):
    if kind == SOURCE_NONE:
        return 0.0
    if kind == SOURCE_LOGISTIC or p == 0.0:
        return r * u - mu * u * u
    # u + e >= e, so the log is well conditioned for every u >= 0.
    log_term = math.log(u + math.e)
    if p != 1.0:
        log_term = log_term**p
    return r * u - mu * u * u / log_term


@njit(cache=True)
def source_field(u, kind, r, mu, p, out):
    ny, nx = u.shape
    for j in range(ny):
        for i in range(nx):
            out[j, i] = source_value(kind, r, mu, p, u[j, i])


@njit(cache=True, inline="always")
def _flux(d, u_lo, u_hi):
    # Upwind face flux d * u_up: cells move up the signal gradient, so the
    # donor is the low-v side (u_lo) when d > 0 and the high side otherwise.
    return max(d, 0.0) * u_lo + min(d, 0.0) * u_hi


@njit(cache=True, inline="always")
def _lap_cell(u, j, i, jm, jp, im, ip, ihx2, ihy2):
    c = u[j, i]
    return ((u[j, im] + u[j, ip]) - 2.0 * c) * ihx2 + ((u[jm, i] + u[jp, i]) - 2.0 * c) * ihy2


@njit(cache=True, inline="always")
def _div_cell(u, v, j, i, jm, jp, im, ip, ihx2, ihy2):
    c = u[j, i]
    vc = v[j, i]
    fe = _flux(v[j, ip] - vc, c, u[j, ip])
    fw = _flux(vc - v[j, im], u[j, im], c)
    fn = _flux(v[jp, i] - vc, c, u[jp, i])
    fs = _flux(vc - v[jm, i], u[jm, i], c)
    return (fe - fw) * ihx2 + (fn - fs) * ihy2


@njit(cache=True)
def laplacian(u, hx, hy, out):
    ny, nx = u.shape
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    for j in range(ny):
        jm = max(j - 1, 0)
        jp = min(j + 1, ny - 1)
        for i in range(nx):
            out[j, i] = _lap_cell(u, j, i, jm, jp, max(i - 1, 0), min(i + 1, nx - 1), ihx2, ihy2)


@njit(cache=True)
def chemotactic_divergence(u, v, hx, hy, out):
    ny, nx = u.shape
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    for j in range(ny):
        jm = max(j - 1, 0)
        jp = min(j + 1, ny - 1)
        for i in range(nx):
            out[j, i] = _div_cell(u, v, j, i, jm, jp, max(i - 1, 0), min(i + 1, nx - 1), ihx2, ihy2)


@njit(cache=True)
def euler_update(u, v, src, dt, hx, hy, chemotaxis, out):
    """out = u + dt * ((lap(u) - div(u grad v)) + src)."""
    ny, nx = u.shape
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    for j in range(ny):
        jm = max(j - 1, 0)
        jp = min(j + 1, ny - 1)
        for i in range(nx):
            im = max(i - 1, 0)
            ip = min(i + 1, nx - 1)
            lap = _lap_cell(u, j, i, jm, jp, im, ip, ihx2, ihy2)
            div = _div_cell(u, v, j, i, jm, jp, im, ip, ihx2, ihy2) if chemotaxis else 0.0
            out[j, i] = u[j, i] + dt * ((lap - div) + src[j, i])


@njit(cache=True)
def step_limits(u, v, src, hx, hy, chemotaxis):
    """Return (max face |grad v|, max |f(u)|/(u+eps), max per-cell outflow rate).

    The outflow rate sums everything that removes u from a cell in one
    explicit step; dt at most its inverse keeps the update monotone.
    """
    ny, nx = u.shape
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    max_dx = 0.0
    max_dy = 0.0
    max_rel_src = 0.0
    max_rate = 0.0
    for j in range(ny):
        jm = max(j - 1, 0)
        jp = min(j + 1, ny - 1)
        ry = (ihy2 if j > 0 else 0.0) + (ihy2 if j < ny - 1 else 0.0)
        for i in range(nx):
            im = max(i - 1, 0)
            ip = min(i + 1, nx - 1)
            rate = ry + (ihx2 if i > 0 else 0.0) + (ihx2 if i < nx - 1 else 0.0)
            if chemotaxis:
                vc = v[j, i]
                de = v[j, ip] - vc
                dw = v[j, im] - vc
                dn = v[jp, i] - vc
                ds = v[jm, i] - vc
                max_dx = max(max_dx, abs(de))
                max_dy = max(max_dy, abs(dn))
                # Flow leaves through every face whose far side has larger v.
                rate += (max(de, 0.0) + max(dw, 0.0)) * ihx2 + (max(dn, 0.0) + max(ds, 0.0)) * ihy2
            rel = src[j, i] / (u[j, i] + REL_SOURCE_EPS)
            max_rel_src = max(max_rel_src, abs(rel))
            max_rate = max(max_rate, rate + max(-rel, 0.0))
    return max(max_dx / hx, max_dy / hy), max_rel_src, max_rate


@njit(cache=True)
def helmholtz_residual(u, v, hx, hy, out):
    """out = u - (v - lap(v)); returns sum(out**2), accumulated serially."""
    ny, nx = u.shape
    ihx2 = 1.0 / (hx * hx)
    ihy2 = 1.0 / (hy * hy)
    acc = 0.0
    for j in range(ny):
        jm = max(j - 1, 0)
        jp = min(j + 1, ny - 1)
        for i in range(nx):
            lap = _lap_cell(v, j, i, jm, jp, max(i - 1, 0), min(i + 1, nx - 1), ihx2, ihy2)
            r = u[j, i] - (v[j, i] - lap)
            out[j, i] = r
            acc += r * r
    return acc


@njit(cache=True)
def sum_squares(a):
    acc = 0.0
    ny, nx = a.shape
    for j in range(ny):
        for i in range(nx):
            acc += a[j, i] * a[j, i]
    return acc


def warmup():
    """Compile every kernel once on a tiny grid."""
    u = np.ones((8, 8))
    out = np.empty_like(u)
    neumaier_sum(u.ravel())
    min_max(u)
    laplacian(u, 1.0, 1.0, out)
    chemotactic_divergence(u, u, 1.0, 1.0, out)
    source_field(u, SOURCE_SUBLOGISTIC, 0.0, 1.0, 1.0, out)
    euler_update(u, u, out, 1e-3, 1.0, 1.0, True, out.copy())
    step_limits(u, u, out, 1.0, 1.0, True)
    helmholtz_residual(u, u, 1.0, 1.0, out)
    sum_squares(u)
