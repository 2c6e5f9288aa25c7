"""Pair-sum kernels for the fractional seminorms.

The O(N^2) double sums over interior node pairs dominate runtime, so they
are implemented twice: as numba @njit loops (default) and as chunked
vectorized numpy (fallback). Select with FRACNORM_BACKEND=numba|numpy|auto;
auto prefers numba when importable. The restricted-window kernels iterate
neighbors in the same row-major order as the full-scan reference kernels so
both paths produce bit-identical sums.

All kernels return raw pair sums; callers apply the h^4 quadrature factor
and the 1/p root.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "USING_NUMBA",
    "tilde_sums",
    "tilde_sums_reference",
    "delta_sums",
    "offregion_weight_sums",
    "restricted_weight_ratio_range",
]

_env = os.environ.get("FRACNORM_BACKEND", "auto").strip().lower()
if _env in ("", "auto"):
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False
elif _env == "numba":
    from numba import njit

    USING_NUMBA = True
elif _env == "numpy":
    USING_NUMBA = False
else:
    raise ValueError(f"FRACNORM_BACKEND must be numba|numpy|auto, got {_env!r}")

BACKEND = "numba" if USING_NUMBA else "numpy"


# -- loop bodies (compiled with numba when active) ---------------------------


def _tilde_loops(xs, ys, d, vals, p, qexp, betas, tau, use_delta, gidx, gix, giy, h):
    n = xs.shape[0]
    nf = vals.shape[0]
    nb = betas.shape[0]
    ny, nx = gidx.shape
    out = np.zeros((nf, nb))
    acc = np.empty((nf, nb))
    tf = np.empty(nf)
    for i in range(n):
        rho = tau * d[i]
        rho2 = rho * rho
        rad = int(rho / h) + 1
        iy0 = giy[i] - rad
        if iy0 < 0:
            iy0 = 0
        iy1 = giy[i] + rad
        if iy1 > ny - 1:
            iy1 = ny - 1
        ix0 = gix[i] - rad
        if ix0 < 0:
            ix0 = 0
        ix1 = gix[i] + rad
        if ix1 > nx - 1:
            ix1 = nx - 1
        acc[:, :] = 0.0
        xi = xs[i]
        yi = ys[i]
        di = d[i]
        for iy2 in range(iy0, iy1 + 1):
            for ix2 in range(ix0, ix1 + 1):
                j = gidx[iy2, ix2]
                if j < 0 or j == i:
                    continue
                dx = xi - xs[j]
                dy = yi - ys[j]
                r2 = dx * dx + dy * dy
                if r2 >= rho2:
                    continue
                kern = r2 ** (-qexp)
                base = di
                if use_delta and d[j] < di:
                    base = d[j]
                for f in range(nf):
                    dv = vals[f, i] - vals[f, j]
                    if p == 2.0:
                        tf[f] = dv * dv
                    else:
                        tf[f] = abs(dv) ** p
                for b in range(nb):
                    w = base ** betas[b] * kern
                    for f in range(nf):
                        acc[f, b] += tf[f] * w
        out += acc
    return out


def _tilde_reference_loops(xs, ys, d, vals, p, qexp, betas, tau, use_delta):
    n = xs.shape[0]
    nf = vals.shape[0]
    nb = betas.shape[0]
    out = np.zeros((nf, nb))
    acc = np.empty((nf, nb))
    tf = np.empty(nf)
    for i in range(n):
        rho = tau * d[i]
        rho2 = rho * rho
        acc[:, :] = 0.0
        xi = xs[i]
        yi = ys[i]
        di = d[i]
        for j in range(n):
            if j == i:
                continue
            dx = xi - xs[j]
            dy = yi - ys[j]
            r2 = dx * dx + dy * dy
            if r2 >= rho2:
                continue
            kern = r2 ** (-qexp)
            base = di
            if use_delta and d[j] < di:
                base = d[j]
            for f in range(nf):
                dv = vals[f, i] - vals[f, j]
                if p == 2.0:
                    tf[f] = dv * dv
                else:
                    tf[f] = abs(dv) ** p
            for b in range(nb):
                w = base ** betas[b] * kern
                for f in range(nf):
                    acc[f, b] += tf[f] * w
        out += acc
    return out


def _delta_loops(xs, ys, d, vals, p, qexp, betas):
    n = xs.shape[0]
    nf = vals.shape[0]
    nb = betas.shape[0]
    out = np.zeros((nf, nb))
    tf = np.empty(nf)
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        di = d[i]
        for j in range(i + 1, n):
            dx = xi - xs[j]
            dy = yi - ys[j]
            r2 = dx * dx + dy * dy
            kern = r2 ** (-qexp)
            dm = di
            if d[j] < di:
                dm = d[j]
            for f in range(nf):
                dv = vals[f, i] - vals[f, j]
                if p == 2.0:
                    tf[f] = dv * dv
                else:
                    tf[f] = abs(dv) ** p
            for b in range(nb):
                w = dm ** betas[b] * kern
                for f in range(nf):
                    out[f, b] += tf[f] * w
    return 2.0 * out


def _offregion_loops(xs, ys, d, qexp, betas):
    n = xs.shape[0]
    nb = betas.shape[0]
    out = np.zeros((nb, n))
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        di = d[i]
        half = 0.5 * di
        thr2 = half * half
        for j in range(n):
            if j == i:
                continue
            dx = xi - xs[j]
            dy = yi - ys[j]
            r2 = dx * dx + dy * dy
            if r2 < thr2:
                continue
            kern = r2 ** (-qexp)
            dm = di
            if d[j] < di:
                dm = d[j]
            for b in range(nb):
                out[b, i] += dm ** betas[b] * kern
    return out


def _ratio_range_loops(xs, ys, d, tau, gidx, gix, giy, h):
    n = xs.shape[0]
    ny, nx = gidx.shape
    rmin = np.inf
    rmax = -np.inf
    for i in range(n):
        rho = tau * d[i]
        rho2 = rho * rho
        rad = int(rho / h) + 1
        iy0 = max(giy[i] - rad, 0)
        iy1 = min(giy[i] + rad, ny - 1)
        ix0 = max(gix[i] - rad, 0)
        ix1 = min(gix[i] + rad, nx - 1)
        xi = xs[i]
        yi = ys[i]
        di = d[i]
        for iy2 in range(iy0, iy1 + 1):
            for ix2 in range(ix0, ix1 + 1):
                j = gidx[iy2, ix2]
                if j < 0 or j == i:
                    continue
                dx = xi - xs[j]
                dy = yi - ys[j]
                r2 = dx * dx + dy * dy
                if r2 >= rho2:
                    continue
                dm = di
                if d[j] < di:
                    dm = d[j]
                ratio = dm / di
                if ratio < rmin:
                    rmin = ratio
                if ratio > rmax:
                    rmax = ratio
    return rmin, rmax


if USING_NUMBA:
    _tilde_njit = njit(cache=True)(_tilde_loops)
    _tilde_reference_njit = njit(cache=True)(_tilde_reference_loops)
    _delta_njit = njit(cache=True)(_delta_loops)
    _offregion_njit = njit(cache=True)(_offregion_loops)
    _ratio_range_njit = njit(cache=True)(_ratio_range_loops)


# -- numpy fallback implementations ------------------------------------------


def _tilde_numpy(xs, ys, d, vals, p, qexp, betas, tau, use_delta, chunk=128):
    n = xs.shape[0]
    nf = vals.shape[0]
    nb = betas.shape[0]
    out = np.zeros((nf, nb))
    rho = tau * d
    for i0 in range(0, n, chunk):
        sl = slice(i0, min(i0 + chunk, n))
        dx = xs[sl, None] - xs[None, :]
        dy = ys[sl, None] - ys[None, :]
        r2 = dx * dx + dy * dy
        mask = (r2 > 0.0) & (r2 < (rho[sl, None]) ** 2)
        safe = np.where(mask, r2, 1.0)
        kern = np.where(mask, safe ** (-qexp), 0.0)
        if use_delta:
            base = np.minimum(d[sl, None], d[None, :])
        else:
            base = np.broadcast_to(d[sl, None], kern.shape)
        for b in range(nb):
            w = base ** betas[b] * kern
            for f in range(nf):
                dv = vals[f, sl, None] - vals[f, None, :]
                t = dv * dv if p == 2.0 else np.abs(dv) ** p
                out[f, b] += float((t * w).sum())
    return out


def _delta_numpy(xs, ys, d, vals, p, qexp, betas, chunk=128):
    n = xs.shape[0]
    nf = vals.shape[0]
    nb = betas.shape[0]
    out = np.zeros((nf, nb))
    for i0 in range(0, n, chunk):
        sl = slice(i0, min(i0 + chunk, n))
        dx = xs[sl, None] - xs[None, :]
        dy = ys[sl, None] - ys[None, :]
        r2 = dx * dx + dy * dy
        mask = r2 > 0.0
        safe = np.where(mask, r2, 1.0)
        kern = np.where(mask, safe ** (-qexp), 0.0)
        dm = np.minimum(d[sl, None], d[None, :])
        for b in range(nb):
            w = dm ** betas[b] * kern
            for f in range(nf):
                dv = vals[f, sl, None] - vals[f, None, :]
                t = dv * dv if p == 2.0 else np.abs(dv) ** p
                out[f, b] += float((t * w).sum())
    return out


def _offregion_numpy(xs, ys, d, qexp, betas, chunk=128):
    n = xs.shape[0]
    nb = betas.shape[0]
    out = np.zeros((nb, n))
    for i0 in range(0, n, chunk):
        sl = slice(i0, min(i0 + chunk, n))
        dx = xs[sl, None] - xs[None, :]
        dy = ys[sl, None] - ys[None, :]
        r2 = dx * dx + dy * dy
        mask = (r2 > 0.0) & (r2 >= (0.5 * d[sl, None]) ** 2)
        safe = np.where(mask, r2, 1.0)
        kern = np.where(mask, safe ** (-qexp), 0.0)
        dm = np.minimum(d[sl, None], d[None, :])
        for b in range(nb):
            out[b, sl] = (dm ** betas[b] * kern).sum(axis=1)
    return out


def _ratio_range_numpy(xs, ys, d, tau, chunk=128):
    n = xs.shape[0]
    rmin, rmax = np.inf, -np.inf
    for i0 in range(0, n, chunk):
        sl = slice(i0, min(i0 + chunk, n))
        dx = xs[sl, None] - xs[None, :]
        dy = ys[sl, None] - ys[None, :]
        r2 = dx * dx + dy * dy
        mask = (r2 > 0.0) & (r2 < (tau * d[sl, None]) ** 2)
        if not mask.any():
            continue
        ratio = np.minimum(d[sl, None], d[None, :]) / d[sl, None]
        vals = ratio[mask]
        rmin = min(rmin, float(vals.min()))
        rmax = max(rmax, float(vals.max()))
    return rmin, rmax


# -- dispatch ----------------------------------------------------------------


def _grid_arrays(dom):
    return (
        np.ascontiguousarray(dom.xs),
        np.ascontiguousarray(dom.ys),
        dom.flat_index,
        dom.node_ix,
        dom.node_iy,
        dom.h,
    )


def _as_batch(vals):
    vals = np.ascontiguousarray(np.atleast_2d(np.asarray(vals, dtype=float)))
    return vals


def tilde_sums(dom, d_values, vals, s, p, betas, tau, use_delta_weight=False):
    """Restricted pair sums over 0 < |x-y| < tau*d(x), shaped (nfuncs, nbetas).

    Weight is d(x)^beta, or min(d(x), d(y))^beta when use_delta_weight.
    """
    xs, ys, gidx, gix, giy, h = _grid_arrays(dom)
    vals = _as_batch(vals)
    betas = np.ascontiguousarray(np.asarray(betas, dtype=float))
    qexp = (2.0 + s * p) / 2.0
    d_values = np.ascontiguousarray(d_values)
    if USING_NUMBA:
        return _tilde_njit(
            xs, ys, d_values, vals, float(p), qexp, betas, float(tau),
            bool(use_delta_weight), gidx, gix, giy, h,
        )
    return _tilde_numpy(
        xs, ys, d_values, vals, float(p), qexp, betas, float(tau),
        bool(use_delta_weight),
    )


def tilde_sums_reference(dom, d_values, vals, s, p, betas, tau, use_delta_weight=False):
    """Full O(N^2) scan of the restricted sum (reference for the windowed path)."""
    xs, ys, *_ = _grid_arrays(dom)
    vals = _as_batch(vals)
    betas = np.ascontiguousarray(np.asarray(betas, dtype=float))
    qexp = (2.0 + s * p) / 2.0
    d_values = np.ascontiguousarray(d_values)
    if USING_NUMBA:
        return _tilde_reference_njit(
            xs, ys, d_values, vals, float(p), qexp, betas, float(tau),
            bool(use_delta_weight),
        )
    return _tilde_numpy(
        xs, ys, d_values, vals, float(p), qexp, betas, float(tau),
        bool(use_delta_weight), chunk=xs.shape[0],
    )


def delta_sums(dom, d_values, vals, s, p, betas):
    """All-pairs sums with weight min(d(x), d(y))^beta, shaped (nfuncs, nbetas)."""
    xs, ys, *_ = _grid_arrays(dom)
    vals = _as_batch(vals)
    betas = np.ascontiguousarray(np.asarray(betas, dtype=float))
    qexp = (2.0 + s * p) / 2.0
    d_values = np.ascontiguousarray(d_values)
    if USING_NUMBA:
        return _delta_njit(xs, ys, d_values, vals, float(p), qexp, betas)
    return _delta_numpy(xs, ys, d_values, vals, float(p), qexp, betas)


def offregion_weight_sums(dom, d_values, s, p, betas):
    """Per-node sums of min(d)^beta / |x-y|^(2+sp) over |x-y| >= d(x)/2.

    Returns an array shaped (nbetas, nnodes); function-independent, so one
    pass serves every test function.
    """
    xs, ys, *_ = _grid_arrays(dom)
    betas = np.ascontiguousarray(np.asarray(betas, dtype=float))
    qexp = (2.0 + s * p) / 2.0
    d_values = np.ascontiguousarray(d_values)
    if USING_NUMBA:
        return _offregion_njit(xs, ys, d_values, qexp, betas)
    return _offregion_numpy(xs, ys, d_values, qexp, betas)


def restricted_weight_ratio_range(dom, d_values, tau):
    """(min, max) of min(d(x),d(y))/d(x) over restricted pairs |x-y| < tau*d(x)."""
    xs, ys, gidx, gix, giy, h = _grid_arrays(dom)
    d_values = np.ascontiguousarray(d_values)
    if USING_NUMBA:
        return _ratio_range_njit(xs, ys, d_values, float(tau), gidx, gix, giy, h)
    return _ratio_range_numpy(xs, ys, d_values, float(tau))
