"""Weighted norms on grid functions.

Weighted L^p and first-order Sobolev norms with boundary-distance power
weights, the truncated fractional seminorm (inner sum limited to
|x-y| < tau*d(x), weight d(x)^beta), and the symmetric-weight seminorm over
all pairs (weight min(d(x),d(y))^beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .domain import DistanceField, GridDomain

__all__ = [
    "GridFunction",
    "FracParams",
    "NormReport",
    "weighted_lp_norm",
    "gradient",
    "gradient_operator",
    "w1p_weighted_norm",
    "tilde_seminorm",
    "tilde_seminorm_batch",
    "delta_seminorm",
    "delta_seminorm_batch",
    "bbm_ratio",
    "norm_report",
    "write_norm_reports_csv",
]


@dataclass(frozen=True)
class GridFunction:
    """Scalar samples at the interior nodes of a GridDomain."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.domain.node_count,):
            raise ValueError("value count must equal interior node count")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")

    @staticmethod
    def from_callable(dom, fn):
        return GridFunction(dom, np.asarray(fn(dom.xs, dom.ys), dtype=float))


@dataclass(frozen=True)
class FracParams:
    """Exponent tuple (s, p, alpha, beta, tau) for the weighted seminorms."""

    s: float
    p: float
    alpha: float = 0.0
    beta: float = 0.0
    tau: float = 0.5

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        if not self.p >= 1:
            raise ValueError("p must be at least 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")


@dataclass(frozen=True)
class NormReport:
    domain: str
    resolution: int
    s: float
    p: float
    alpha: float
    beta: float
    tau: float
    lp: float
    w1p: float
    tilde_seminorm: float
    delta_seminorm: float


def _dvals(d):
    return d.values if isinstance(d, DistanceField) else np.asarray(d, dtype=float)


def weighted_lp_norm(f, d, gamma, p):
    """(sum |f|^p d^gamma h^2)^(1/p) over interior nodes."""
    if gamma < 0:
        raise ValueError("weight exponent must be nonnegative")
    if p < 1:
        raise ValueError("p must be at least 1")
    vals = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    dom = f.domain if isinstance(f, GridFunction) else d.domain
    dv = _dvals(d)
    w = dv**gamma if gamma != 0 else 1.0
    total = float(np.sum(np.abs(vals) ** p * w)) * dom.cell_weight
    return total ** (1.0 / p)


def gradient_operator(dom):
    """Sparse difference operators (Gx, Gy), each (N, N), cached on the domain.

    Central differences where both axis neighbors are interior, one-sided
    where only one is, zero rows where neither is.
    """
    cached = getattr(dom, "_grad_ops", None)
    if cached is not None:
        return cached
    n = dom.node_count
    gidx = dom.flat_index
    ny, nx = gidx.shape
    h = dom.h
    ops = []
    for axis in range(2):
        rows, cols, data = [], [], []
        for i in range(n):
            ix, iy = dom.node_ix[i], dom.node_iy[i]
            if axis == 0:
                jm = gidx[iy, ix - 1] if ix > 0 else -1
                jp = gidx[iy, ix + 1] if ix < nx - 1 else -1
            else:
                jm = gidx[iy - 1, ix] if iy > 0 else -1
                jp = gidx[iy + 1, ix] if iy < ny - 1 else -1
            if jm >= 0 and jp >= 0:
                rows += [i, i]
                cols += [jp, jm]
                data += [0.5 / h, -0.5 / h]
            elif jp >= 0:
                rows += [i, i]
                cols += [jp, i]
                data += [1.0 / h, -1.0 / h]
            elif jm >= 0:
                rows += [i, i]
                cols += [i, jm]
                data += [1.0 / h, -1.0 / h]
        ops.append(sp.csr_matrix((data, (rows, cols)), shape=(n, n)))
    dom._grad_ops = tuple(ops)
    return dom._grad_ops


def gradient(f):
    """Discrete gradient of a GridFunction, shaped (N, 2)."""
    gx, gy = gradient_operator(f.domain)
    return np.column_stack([gx @ f.values, gy @ f.values])


def w1p_weighted_norm(f, d, gamma0, gamma1, p):
    """Weighted L^p norm of f plus weighted L^p norm of |grad f|."""
    g = gradient(f)
    gm = GridFunction(f.domain, np.hypot(g[:, 0], g[:, 1]))
    return weighted_lp_norm(f, d, gamma0, p) + weighted_lp_norm(gm, d, gamma1, p)


def tilde_seminorm(f, d, params):
    """Truncated seminorm with inner sum over 0 < |x-y| < tau*d(x)."""
    out = tilde_seminorm_batch(
        f.domain, d, f.values[None, :], params.s, params.p, [params.beta], params.tau
    )
    return float(out[0, 0])


def tilde_seminorm_batch(dom, d, vals, s, p, betas, tau, use_delta_weight=False):
    """Batched truncated seminorms, shaped (nfuncs, nbetas)."""
    sums = kernels.tilde_sums(
        dom, _dvals(d), vals, s, p, betas, tau, use_delta_weight=use_delta_weight
    )
    return (sums * dom.cell_weight**2) ** (1.0 / p)


def delta_seminorm(f, d, s, p, beta):
    """Symmetric-weight seminorm over all interior pairs."""
    out = delta_seminorm_batch(f.domain, d, f.values[None, :], s, p, [beta])
    return float(out[0, 0])


def delta_seminorm_batch(dom, d, vals, s, p, betas):
    """Batched all-pairs seminorms, shaped (nfuncs, nbetas)."""
    sums = kernels.delta_sums(dom, _dvals(d), vals, s, p, betas)
    return (sums * dom.cell_weight**2) ** (1.0 / p)


def bbm_ratio(f, d, s, p):
    """(1-s) * |f|_tilde^p / ||grad f||_p^p with the unweighted truncated
    seminorm (beta = 0, tau = 1/2).

    Diagnostic for the s -> 1 gradient-limit behaviour; raises when the
    discrete gradient vanishes.
    """
    g = gradient(f)
    gm = GridFunction(f.domain, np.hypot(g[:, 0], g[:, 1]))
    grad_norm = weighted_lp_norm(gm, d, 0.0, p)
    if grad_norm == 0.0:
        raise ValueError("bbm_ratio undefined for functions with zero gradient")
    semi = tilde_seminorm_batch(f.domain, d, f.values[None, :], s, p, [0.0], 0.5)
    return (1.0 - s) * float(semi[0, 0]) ** p / grad_norm**p


def norm_report(f, d, params):
    """All four norms of f under one parameter tuple."""
    dom = f.domain
    lp = weighted_lp_norm(f, d, params.alpha * params.p, params.p)
    w1p = w1p_weighted_norm(
        f, d, params.alpha * params.p, (params.alpha + 1.0) * params.p, params.p
    )
    til = tilde_seminorm(f, d, params)
    dlt = delta_seminorm(f, d, params.s, params.p, params.beta)
    return NormReport(
        domain=dom.spec.kind,
        resolution=dom.resolution,
        s=params.s,
        p=params.p,
        alpha=params.alpha,
        beta=params.beta,
        tau=params.tau,
        lp=lp,
        w1p=w1p,
        tilde_seminorm=til,
        delta_seminorm=dlt,
    )


NORM_REPORT_HEADER = "domain,resolution,s,p,alpha,beta,tau,lp,w1p,tilde,delta"


def write_norm_reports_csv(reports, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(NORM_REPORT_HEADER + "\n")
        for r in reports:
            fh.write(
                f"{r.domain},{r.resolution},{r.s:.17g},{r.p:.17g},{r.alpha:.17g},"
                f"{r.beta:.17g},{r.tau:.17g},{r.lp:.17g},{r.w1p:.17g},"
                f"{r.tilde_seminorm:.17g},{r.delta_seminorm:.17g}\n"
            )
