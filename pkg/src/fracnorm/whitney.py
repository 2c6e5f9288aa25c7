"""Dyadic Whitney covers and the smooth approximation operator built on them.

A Whitney decomposition tiles the domain with closed dyadic squares whose
diameter is comparable to their distance from the boundary. Each square can
be split into congruent subcells at a relative scale lambda; expanding the
subcells by 9/8 yields a finite-overlap cover carrying a smooth partition
of unity. Averaging a function against a bump kernel on each cell and
recombining through the partition gives a smooth approximant at scale
lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import GridDomain

__all__ = [
    "WhitneyCube",
    "WhitneyDecomposition",
    "RefinedDecomposition",
    "ExpandedCover",
    "PartitionOfUnity",
    "whitney_decompose",
    "check_decomposition",
    "refine_lambda",
    "lambda_split_level",
    "expanded_cover",
    "partition_of_unity",
    "mollifier_eval",
    "mollifier_integral",
    "convolve",
    "local_average",
    "smooth_approximant",
    "SmoothApproximant",
    "shift_mass_ratio",
    "export_whitney_csv",
]

SQRT2 = math.sqrt(2.0)
EXPAND = 9.0 / 8.0


@dataclass(frozen=True)
class WhitneyCube:
    """Closed dyadic square: generation, lattice index, geometry, boundary gap."""

    gen: int
    ix: int
    iy: int
    x0: float
    y0: float
    edge: float
    dist: float
    subgrid: bool

    @property
    def diam(self):
        return SQRT2 * self.edge

    @property
    def center(self):
        return (self.x0 + 0.5 * self.edge, self.y0 + 0.5 * self.edge)


@dataclass(frozen=True)
class WhitneyDecomposition:
    domain: GridDomain
    root_origin: tuple
    root_scale: float
    cubes: tuple

    def arrays(self):
        """(x0, y0, edge, dist, subgrid) as numpy arrays."""
        x0 = np.array([c.x0 for c in self.cubes])
        y0 = np.array([c.y0 for c in self.cubes])
        edge = np.array([c.edge for c in self.cubes])
        dist = np.array([c.dist for c in self.cubes])
        sub = np.array([c.subgrid for c in self.cubes])
        return x0, y0, edge, dist, sub


def _root_square(dom):
    x0, y0, x1, y1 = dom.spec.bounding_box()
    ext = max(x1 - x0, y1 - y0)
    scale = 2.0 ** math.ceil(math.log2(ext) - 1e-12)
    if scale < ext:
        scale *= 2.0
    return (x0, y0), scale


def whitney_decompose(dom, d=None):
    """Greedy maximal dyadic decomposition of the interior node set.

    A square is accepted once diam(Q) <= d(Q, boundary); squares failing the
    test are quartered until their edge drops below twice the grid spacing,
    at which point they are kept but flagged subgrid. Only squares containing
    interior nodes are retained, so the union covers every interior node.
    """
    (rx, ry), scale = _root_square(dom)
    h = dom.h
    ox, oy = dom.origin
    accepted = []
    stack = [(0, 0, 0)]
    while stack:
        gen, i, j = stack.pop()
        edge = scale / (1 << gen)
        x0 = rx + i * edge
        y0 = ry + j * edge
        ix0 = int(math.ceil((x0 - ox) / h - 1e-9))
        ix1 = int(math.floor((x0 + edge - ox) / h + 1e-9))
        iy0 = int(math.ceil((y0 - oy) / h - 1e-9))
        iy1 = int(math.floor((y0 + edge - oy) / h + 1e-9))
        if dom.count_interior_in_index_box(ix0, ix1, iy0, iy1) == 0:
            continue
        dist = dom.rect_boundary_distance(x0, y0, x0 + edge, y0 + edge)
        if SQRT2 * edge <= dist:
            accepted.append(WhitneyCube(gen, i, j, x0, y0, edge, dist, False))
        elif edge < 2.0 * h:
            accepted.append(WhitneyCube(gen, i, j, x0, y0, edge, dist, True))
        else:
            for dj in (1, 0):
                for di in (1, 0):
                    stack.append((gen + 1, 2 * i + di, 2 * j + dj))
    accepted.sort(key=lambda c: (c.gen, c.iy, c.ix))
    return WhitneyDecomposition(
        domain=dom, root_origin=(rx, ry), root_scale=scale, cubes=tuple(accepted)
    )


def check_decomposition(W):
    """Exhaustive property check; returns a dict of measured results.

    Checks, for non-subgrid cubes, diam <= dist <= 4*diam and maximality of
    the parent; for all touching pairs, the diameter ratio within [1/4, 4];
    and that every interior node lies in at least one cube.
    """
    dom = W.domain
    x0, y0, edge, dist, sub = W.arrays()
    n = len(W.cubes)
    diam = SQRT2 * edge
    normal = ~sub
    lower_ok = int(np.sum(diam[normal] <= dist[normal]))
    upper_ok = int(np.sum(dist[normal] <= 4.0 * diam[normal]))
    n_normal = int(normal.sum())

    parent_fail = 0
    (rx, ry), scale = W.root_origin, W.root_scale
    for c in W.cubes:
        if c.subgrid or c.gen == 0:
            continue
        pedge = 2.0 * c.edge
        px0 = rx + (c.ix // 2) * pedge
        py0 = ry + (c.iy // 2) * pedge
        pdist = dom.rect_boundary_distance(px0, py0, px0 + pedge, py0 + pedge)
        if SQRT2 * pedge > pdist:
            parent_fail += 1
    n_with_parent = int(np.sum(normal & (np.array([c.gen for c in W.cubes]) > 0)))

    cx = x0 + 0.5 * edge
    cy = y0 + 0.5 * edge
    half = 0.5 * edge
    pairs = 0
    ratio_ok = 0
    chunk = 512
    for a0 in range(0, n, chunk):
        sl = slice(a0, min(a0 + chunk, n))
        tx = np.abs(cx[sl, None] - cx[None, :]) <= half[sl, None] + half[None, :] + 1e-12
        ty = np.abs(cy[sl, None] - cy[None, :]) <= half[sl, None] + half[None, :] + 1e-12
        touch = tx & ty
        ii, jj = np.nonzero(touch)
        keep = (ii + a0) < jj
        ii, jj = ii[keep], jj[keep]
        pairs += ii.size
        r = diam[ii + a0] / diam[jj]
        ratio_ok += int(np.sum((r >= 0.25) & (r <= 4.0)))

    covered = np.zeros(dom.node_count, dtype=bool)
    for c in W.cubes:
        idx = _nodes_in_box(dom, c.x0, c.y0, c.x0 + c.edge, c.y0 + c.edge)
        covered[idx] = True

    return {
        "n_cubes": n,
        "n_normal": n_normal,
        "n_subgrid": n - n_normal,
        "lower_ok": lower_ok,
        "upper_ok": upper_ok,
        "parent_maximal": parent_fail,
        "n_with_parent": n_with_parent,
        "touching_pairs": pairs,
        "ratio_ok": ratio_ok,
        "nodes_covered": int(covered.sum()),
        "nodes_total": dom.node_count,
    }


def _nodes_in_box(dom, x0, y0, x1, y1):
    """Flat indices of interior nodes inside the closed box."""
    h = dom.h
    ox, oy = dom.origin
    ix0 = max(int(math.ceil((x0 - ox) / h - 1e-9)), 0)
    ix1 = min(int(math.floor((x1 - ox) / h + 1e-9)), dom.nx - 1)
    iy0 = max(int(math.ceil((y0 - oy) / h - 1e-9)), 0)
    iy1 = min(int(math.floor((y1 - oy) / h + 1e-9)), dom.ny - 1)
    if ix0 > ix1 or iy0 > iy1:
        return np.empty(0, dtype=np.int64)
    block = dom.flat_index[iy0 : iy1 + 1, ix0 : ix1 + 1].ravel()
    return block[block >= 0]


def lambda_split_level(lam):
    """Smallest k >= 0 with 2^-k <= lam, so cell edges land in (lam/2, lam]."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    k = max(0, int(math.ceil(-math.log2(lam) - 1e-12)))
    while 2.0 ** (-k) > lam:
        k += 1
    while k > 0 and 2.0 ** (-(k - 1)) <= lam:
        k -= 1
    return k


@dataclass(frozen=True)
class RefinedDecomposition:
    """Congruent 4^k splits of each Whitney cube at relative scale lambda."""

    parent: WhitneyDecomposition
    lam: float
    level: int
    cx: np.ndarray
    cy: np.ndarray
    ell: np.ndarray
    parent_index: np.ndarray
    parent_subgrid: np.ndarray

    @property
    def n_cells(self):
        return self.cx.size


def refine_lambda(W, lam):
    """Split every cube into 4^k congruent cells with edges in (lam/2, lam]*edge."""
    k = lambda_split_level(lam)
    m = 1 << k
    cxs, cys, ells, pidx, psub = [], [], [], [], []
    for ci, c in enumerate(W.cubes):
        ell = c.edge / m
        base = (np.arange(m) + 0.5) * ell
        gx, gy = np.meshgrid(c.x0 + base, c.y0 + base)
        cxs.append(gx.ravel())
        cys.append(gy.ravel())
        ells.append(np.full(m * m, ell))
        pidx.append(np.full(m * m, ci, dtype=np.int64))
        psub.append(np.full(m * m, c.subgrid, dtype=bool))
    return RefinedDecomposition(
        parent=W,
        lam=float(lam),
        level=k,
        cx=np.concatenate(cxs),
        cy=np.concatenate(cys),
        ell=np.concatenate(ells),
        parent_index=np.concatenate(pidx),
        parent_subgrid=np.concatenate(psub),
    )


@dataclass(frozen=True)
class ExpandedCover:
    """Cells expanded by 9/8 about their centers, with per-node overlap counts."""

    refined: RefinedDecomposition
    half: np.ndarray
    overlap: np.ndarray
    cell_nodes: tuple

    @property
    def domain(self):
        return self.refined.parent.domain


def expanded_cover(R):
    dom = R.parent.domain
    half = (EXPAND / 2.0) * R.ell
    overlap = np.zeros(dom.node_count, dtype=np.int64)
    cell_nodes = []
    for j in range(R.n_cells):
        idx = _nodes_in_box(
            dom,
            R.cx[j] - half[j],
            R.cy[j] - half[j],
            R.cx[j] + half[j],
            R.cy[j] + half[j],
        )
        cell_nodes.append(idx)
        overlap[idx] += 1
    return ExpandedCover(refined=R, half=half, overlap=overlap, cell_nodes=tuple(cell_nodes))


def distance_comparability(cover, d):
    """Check 3/4*diam(cell)/lam <= d(x) <= 41/4*diam(cell)/lam at covered nodes.

    Cells descending from subgrid cubes are skipped (their parents carry no
    size-to-distance guarantee). Returns (checked, violations).
    """
    R = cover.refined
    lam = R.lam
    checked = 0
    bad = 0
    dv = d.values
    for j in range(R.n_cells):
        if R.parent_subgrid[j]:
            continue
        idx = cover.cell_nodes[j]
        if idx.size == 0:
            continue
        diam = SQRT2 * R.ell[j]
        lo = 0.75 * diam / lam
        hi = (41.0 / 4.0) * diam / lam
        vals = dv[idx]
        checked += idx.size
        bad += int(np.sum((vals < lo - 1e-12) | (vals > hi + 1e-12)))
    return checked, bad


# -- partition of unity -------------------------------------------------------


def _smoothstep5(u):
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep5_deriv(u):
    return 30.0 * u * u * (1.0 - u) ** 2


def _cutoff(rho):
    """Quintic profile of the max-norm radius: 1 for rho<=8/9, 0 for rho>=1."""
    u = np.clip((np.asarray(rho) - 8.0 / 9.0) * 9.0, 0.0, 1.0)
    return 1.0 - _smoothstep5(u)


def _cutoff_deriv(rho):
    rho = np.asarray(rho)
    u = (rho - 8.0 / 9.0) * 9.0
    inside = (u > 0.0) & (u < 1.0)
    out = np.zeros(rho.shape)
    out[inside] = -9.0 * _smoothstep5_deriv(u[inside])
    return out


def _bump_and_grad(px, py, cx, cy, ell):
    """Cell bump value and gradient at points; supported in the 9/8 box."""
    scale = 16.0 / (9.0 * ell)
    ux = (px - cx) * scale
    uy = (py - cy) * scale
    ax, ay = np.abs(ux), np.abs(uy)
    rho = np.maximum(ax, ay)
    b = _cutoff(rho)
    db = _cutoff_deriv(rho)
    xdom = ax >= ay
    gx = np.where(xdom, db * np.sign(ux) * scale, 0.0)
    gy = np.where(~xdom, db * np.sign(uy) * scale, 0.0)
    return b, gx, gy


class PartitionOfUnity:
    """Normalized cell bumps: psi_j = b_j / sum_k b_k on the expanded cover.

    Each interior node lies in some unexpanded cell, so the denominator is
    at least 1 everywhere; psi_j is supported in the expanded cell and sums
    to one over j at every interior node.
    """

    def __init__(self, cover):
        self.cover = cover
        R = cover.refined
        dom = R.parent.domain
        self.domain = dom
        n = dom.node_count
        bsum = np.zeros(n)
        gxsum = np.zeros(n)
        gysum = np.zeros(n)
        inc_b, inc_gx, inc_gy = [], [], []
        for j in range(R.n_cells):
            idx = cover.cell_nodes[j]
            if idx.size == 0:
                inc_b.append(np.empty(0))
                inc_gx.append(np.empty(0))
                inc_gy.append(np.empty(0))
                continue
            b, gx, gy = _bump_and_grad(
                dom.xs[idx], dom.ys[idx], R.cx[j], R.cy[j], R.ell[j]
            )
            bsum[idx] += b
            gxsum[idx] += gx
            gysum[idx] += gy
            inc_b.append(b)
            inc_gx.append(gx)
            inc_gy.append(gy)
        if np.any(bsum <= 0.0):
            nbad = int(np.sum(bsum <= 0.0))
            raise RuntimeError(
                f"partition denominator vanishes at {nbad} interior nodes (cover bug)"
            )
        self.b_sum = bsum
        self.gx_sum = gxsum
        self.gy_sum = gysum
        self._inc_b = inc_b
        self._inc_gx = inc_gx
        self._inc_gy = inc_gy

    @property
    def n_cells(self):
        return self.cover.refined.n_cells

    def partition_sum(self):
        """sum_j psi_j per node, accumulated cell by cell (a float identity check)."""
        out = np.zeros(self.domain.node_count)
        for j in range(self.n_cells):
            idx = self.cover.cell_nodes[j]
            if idx.size:
                out[idx] += self._inc_b[j] / self.b_sum[idx]
        return out

    def combine(self, coeffs):
        """h = sum_j c_j psi_j and its analytic gradient at the nodes."""
        dom = self.domain
        F = np.zeros(dom.node_count)
        Fx = np.zeros(dom.node_count)
        Fy = np.zeros(dom.node_count)
        for j in range(self.n_cells):
            idx = self.cover.cell_nodes[j]
            if idx.size == 0:
                continue
            c = coeffs[j]
            F[idx] += c * self._inc_b[j]
            Fx[idx] += c * self._inc_gx[j]
            Fy[idx] += c * self._inc_gy[j]
        B = self.b_sum
        h = F / B
        gx = Fx / B - F * self.gx_sum / (B * B)
        gy = Fy / B - F * self.gy_sum / (B * B)
        return h, np.column_stack([gx, gy])

    def _neighbor_lists(self, pad):
        R = self.cover.refined
        half = self.cover.half
        cx, cy = R.cx, R.cy
        n = R.n_cells
        nbrs = []
        chunk = 256
        for a0 in range(0, n, chunk):
            sl = slice(a0, min(a0 + chunk, n))
            ox = np.abs(cx[sl, None] - cx[None, :]) <= half[sl, None] + pad + half[None, :]
            oy = np.abs(cy[sl, None] - cy[None, :]) <= half[sl, None] + pad + half[None, :]
            hit = ox & oy
            for r in range(hit.shape[0]):
                nbrs.append(np.nonzero(hit[r])[0])
        return nbrs

    def max_gradient_scan(self, probes_per_axis=7, fd_frac=1.0 / 64.0):
        """Max finite-difference |grad psi_j| per cell, scanned on probe lattices.

        Probes cover each expanded cell; the stencil keeps only points where
        every shifted evaluation stays inside the domain and covered by the
        cover. Returns an array of per-cell maxima (nan when no probe valid).
        """
        R = self.cover.refined
        dom = self.domain
        spec = dom.spec
        half = self.cover.half
        out = np.full(R.n_cells, np.nan)
        pad = float((fd_frac * R.ell).max())
        nbrs = self._neighbor_lists(pad)
        t = (np.arange(probes_per_axis) + 0.5) / probes_per_axis - 0.5
        for j in range(R.n_cells):
            step = fd_frac * R.ell[j]
            px, py = np.meshgrid(
                R.cx[j] + 2.0 * half[j] * t, R.cy[j] + 2.0 * half[j] * t
            )
            px = px.ravel()
            py = py.ravel()
            pts_x = np.concatenate([px, px + step, px - step, px, px])
            pts_y = np.concatenate([py, py, py, py + step, py - step])
            ok = spec.contains(pts_x, pts_y).reshape(5, -1).all(axis=0)
            if not ok.any():
                continue
            px5 = pts_x.reshape(5, -1)[:, ok]
            py5 = pts_y.reshape(5, -1)[:, ok]
            B = np.zeros(px5.shape)
            bj = None
            for k in nbrs[j]:
                b, _, _ = _bump_and_grad(px5, py5, R.cx[k], R.cy[k], R.ell[k])
                B += b
                if k == j:
                    bj = b
            covered = (B > 0.0).all(axis=0)
            if bj is None or not covered.any():
                continue
            psi = bj[:, covered] / B[:, covered]
            dpx = (psi[1] - psi[2]) / (2.0 * step)
            dpy = (psi[3] - psi[4]) / (2.0 * step)
            out[j] = float(np.sqrt(dpx * dpx + dpy * dpy).max())
        return out


def partition_of_unity(cover):
    """Build the smooth partition of unity subordinate to the expanded cover."""
    return PartitionOfUnity(cover)


# -- mollifier ----------------------------------------------------------------

_BUMP_NORM = None
_AUTOCONV = None


def _bump_norm():
    """Normalizing constant so the bump integrates to one (radial trapezoid)."""
    global _BUMP_NORM
    if _BUMP_NORM is None:
        u = np.linspace(0.0, 1.0, 10001)
        g = np.zeros_like(u)
        inner = u < 1.0
        g[inner] = np.exp(-1.0 / (1.0 - u[inner] ** 2)) * u[inner]
        integral = np.trapezoid(g, u) * (np.pi / 8.0)
        _BUMP_NORM = 1.0 / integral
    return _BUMP_NORM


def _bump_unit(rho):
    """Unit-scale bump profile at radius rho (support rho < 1/4), mass one."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros(rho.shape)
    u = 4.0 * rho
    inside = u < 1.0
    out[inside] = _bump_norm() * np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def mollifier_eval(t, points):
    """phi_t(x) = t^-2 phi(x/t) at points shaped (M, 2); support |x| < t/4."""
    if t <= 0:
        raise ValueError("mollifier scale must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rho = np.hypot(pts[:, 0], pts[:, 1]) / t
    return _bump_unit(rho) / (t * t)


def mollifier_integral(t, n=1201):
    """Midpoint quadrature of phi_t over its support square."""
    u = ((np.arange(n) + 0.5) / n - 0.5) * (t / 2.0)
    X, Y = np.meshgrid(u, u)
    vals = mollifier_eval(t, np.column_stack([X.ravel(), Y.ravel()]))
    return float(vals.sum()) * (t / (2.0 * n)) ** 2


def _autoconv_profile():
    """Radial table of the bump autoconvolution (support rho < 1/2)."""
    global _AUTOCONV
    if _AUTOCONV is None:
        nw = 161
        u = ((np.arange(nw) + 0.5) / nw - 0.5) * 0.5
        WX, WY = np.meshgrid(u, u)
        wx = WX.ravel()
        wy = WY.ravel()
        phi_w = _bump_unit(np.hypot(wx, wy))
        area = (0.5 / nw) ** 2
        rhos = np.linspace(0.0, 0.5, 1001)
        vals = np.empty(rhos.size)
        for i, r in enumerate(rhos):
            vals[i] = np.sum(phi_w * _bump_unit(np.hypot(r - wx, wy))) * area
        _AUTOCONV = (rhos, vals)
    return _AUTOCONV


def _quad_offsets(n):
    """Symmetric midpoint lattice on [-1/2, 1/2]^2."""
    u = (np.arange(n) + 0.5) / n - 0.5
    UX, UY = np.meshgrid(u, u)
    return UX.ravel(), UY.ravel()


def _interp_grid_values(dom, values, px, py):
    """Bilinear interpolation of node values; nearest interior node where the
    four-node stencil is incomplete. Points must lie within the node lattice."""
    h = dom.h
    ox, oy = dom.origin
    fx = (px - ox) / h
    fy = (py - oy) / h
    ix = np.clip(np.floor(fx).astype(np.int64), 0, dom.nx - 2)
    iy = np.clip(np.floor(fy).astype(np.int64), 0, dom.ny - 2)
    tx = fx - ix
    ty = fy - iy
    gidx = dom.flat_index
    i00 = gidx[iy, ix]
    i10 = gidx[iy, ix + 1]
    i01 = gidx[iy + 1, ix]
    i11 = gidx[iy + 1, ix + 1]
    full = (i00 >= 0) & (i10 >= 0) & (i01 >= 0) & (i11 >= 0)
    out = np.empty(px.shape)
    v = values
    f = full
    out[f] = (
        v[i00[f]] * (1 - tx[f]) * (1 - ty[f])
        + v[i10[f]] * tx[f] * (1 - ty[f])
        + v[i01[f]] * (1 - tx[f]) * ty[f]
        + v[i11[f]] * tx[f] * ty[f]
    )
    if np.any(~full):
        r = ~full
        w = np.stack(
            [
                np.where(i00[r] >= 0, (1 - tx[r]) * (1 - ty[r]), 0.0),
                np.where(i10[r] >= 0, tx[r] * (1 - ty[r]), 0.0),
                np.where(i01[r] >= 0, (1 - tx[r]) * ty[r], 0.0),
                np.where(i11[r] >= 0, tx[r] * ty[r], 0.0),
            ]
        )
        vals = np.stack(
            [
                np.where(i00[r] >= 0, v[np.maximum(i00[r], 0)], 0.0),
                np.where(i10[r] >= 0, v[np.maximum(i10[r], 0)], 0.0),
                np.where(i01[r] >= 0, v[np.maximum(i01[r], 0)], 0.0),
                np.where(i11[r] >= 0, v[np.maximum(i11[r], 0)], 0.0),
            ]
        )
        wsum = w.sum(axis=0)
        if np.any(wsum <= 0.0):
            raise ValueError("interpolation point has no interior stencil node")
        out[r] = (w * vals).sum(axis=0) / wsum
    return out


def _eval_f(f, dom, px, py):
    from .norms import GridFunction

    if isinstance(f, GridFunction):
        return _interp_grid_values(dom, f.values, px, py)
    return np.asarray(f(px, py), dtype=float)


def convolve(f, t, points, dom=None, n_quad=32):
    """(f * phi_t) at the given points, by normalized midpoint quadrature on a
    kernel-centered symmetric lattice.

    Raises when any point's support disc B(x, t/4) leaves the domain. For
    grid-sampled f the integrand is interpolated bilinearly; accuracy near
    the validity margin degrades to O(h).
    """
    from .norms import GridFunction

    if dom is None:
        if not isinstance(f, GridFunction):
            raise ValueError("dom is required when f is a callable")
        dom = f.domain
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dvals = dom.distance_at(pts[:, 0], pts[:, 1])
    if np.any(dvals <= t / 4.0):
        raise ValueError("mollifier support exits the domain at an evaluation point")
    ux, uy = _quad_offsets(n_quad)
    # quadrature offsets span [-t/4, t/4]
    qx = 0.5 * t * ux
    qy = 0.5 * t * uy
    w = _bump_unit(np.hypot(ux, uy) * 0.5)
    w = w / w.sum()
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        vals = _eval_f(f, dom, pts[i, 0] - qx, pts[i, 1] - qy)
        out[i] = float(vals @ w)
    return out


def local_average(f, cell, dom=None, n_quad=25, strict=True):
    """Average of f against the squared-kernel window of a refined cell.

    `cell` is (cx, cy, ell); the window is the autoconvolution of the bump at
    scale ell, supported in B(center, ell/2). Computed by normalized midpoint
    quadrature on a centered symmetric lattice, so constants are reproduced
    exactly and affine functions up to roundoff. Raises (or returns None when
    strict=False) if the support leaves the domain.
    """
    from .norms import GridFunction

    if dom is None:
        if not isinstance(f, GridFunction):
            raise ValueError("dom is required when f is a callable")
        dom = f.domain
    cx, cy, ell = cell
    margin = ell / 2.0
    if isinstance(f, GridFunction):
        margin += 2.0 * dom.h
    if not dom.distance_at(cx, cy) > margin:
        if strict:
            raise ValueError("cell averaging window exits the domain")
        return None
    ux, uy = _quad_offsets(n_quad)
    rhos, table = _autoconv_profile()
    w = np.interp(np.hypot(ux, uy), rhos, table, right=0.0)
    w = w / w.sum()
    vals = _eval_f(f, dom, cx + ell * ux, cy + ell * uy)
    return float(vals @ w)


@dataclass(frozen=True)
class SmoothApproximant:
    """Result of the scale-lambda smoothing: values, analytic gradient, cells."""

    values: np.ndarray
    grad: np.ndarray
    pou: PartitionOfUnity
    cell_averages: np.ndarray
    cell_method: np.ndarray  # 0 kernel quadrature, 1 nodal mean, 2 empty

    def as_grid_function(self, dom):
        from .norms import GridFunction

        return GridFunction(dom, self.values)


def smooth_approximant(f, lam, dom=None, decomposition=None, n_quad=25):
    """h(y) = sum_j f_j psi_j(y) at the interior nodes, with analytic gradient.

    Cell averages f_j use the kernel quadrature where the averaging window
    stays inside the domain; cells too close to the boundary (grid-scale
    geometry, flagged subgrid) fall back to the mean of f over the interior
    nodes of the expanded cell, preserving reproduction of constants. Cells
    whose expanded box contains no interior node get f_j = 0 and psi_j = 0
    at every node.
    """
    from .norms import GridFunction

    if dom is None:
        if not isinstance(f, GridFunction):
            raise ValueError("dom is required when f is a callable")
        dom = f.domain
    W = decomposition
    if W is None:
        W = getattr(dom, "_whitney", None)
        if W is None:
            W = whitney_decompose(dom)
            dom._whitney = W
    R = refine_lambda(W, lam)
    cover = expanded_cover(R)
    pou = partition_of_unity(cover)

    n_cells = R.n_cells
    avgs = np.zeros(n_cells)
    method = np.zeros(n_cells, dtype=np.int64)
    centers_d = dom.distance_at(R.cx, R.cy)
    margin = R.ell / 2.0
    if isinstance(f, GridFunction):
        margin = margin + 2.0 * dom.h
    quad_ok = centers_d > margin

    ux, uy = _quad_offsets(n_quad)
    rhos, table = _autoconv_profile()
    w = np.interp(np.hypot(ux, uy), rhos, table, right=0.0)
    w = w / w.sum()
    for ell in np.unique(R.ell):
        sel = np.nonzero(quad_ok & (R.ell == ell))[0]
        if sel.size == 0:
            continue
        px = R.cx[sel, None] + ell * ux[None, :]
        py = R.cy[sel, None] + ell * uy[None, :]
        vals = _eval_f(f, dom, px.ravel(), py.ravel()).reshape(sel.size, -1)
        avgs[sel] = vals @ w

    fvals = f.values if isinstance(f, GridFunction) else None
    for j in np.nonzero(~quad_ok)[0]:
        idx = cover.cell_nodes[j]
        if idx.size == 0:
            method[j] = 2
            avgs[j] = 0.0
            continue
        method[j] = 1
        if fvals is not None:
            avgs[j] = float(fvals[idx].mean())
        else:
            avgs[j] = float(np.mean(f(dom.xs[idx], dom.ys[idx])))

    hvals, grad = pou.combine(avgs)
    return SmoothApproximant(
        values=hvals, grad=grad, pou=pou, cell_averages=avgs, cell_method=method
    )


def shift_mass_ratio(dom, phi, w, t, d=None):
    """Grid quadrature mass of phi(x + t d(x) w) relative to the mass of phi.

    `phi` is a nonnegative callable evaluable at arbitrary points; |w| < 1/2
    keeps the shifted points inside the domain.
    """
    if np.hypot(w[0], w[1]) >= 0.5:
        raise ValueError("shift direction must satisfy |w| < 1/2")
    if not 0.0 <= t <= 1.0:
        raise ValueError("shift time must lie in [0, 1]")
    if d is None:
        d = dom.distance_field()
    sx = dom.xs + t * d.values * w[0]
    sy = dom.ys + t * d.values * w[1]
    shifted = np.asarray(phi(sx, sy), dtype=float)
    base = np.asarray(phi(dom.xs, dom.ys), dtype=float)
    if np.any(shifted < 0) or np.any(base < 0):
        raise ValueError("phi must be nonnegative")
    denom = float(base.sum())
    if denom == 0.0:
        raise ValueError("phi has zero mass on the grid")
    return float(shifted.sum()) / denom


def export_whitney_csv(W, path):
    """(generation, ix, iy, edge, center_x, center_y, d_to_boundary, subgrid_flag)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("generation,ix,iy,edge,center_x,center_y,d_to_boundary,subgrid_flag\n")
        for c in W.cubes:
            cx, cy = c.center
            fh.write(
                f"{c.gen},{c.ix},{c.iy},{c.edge:.17g},{cx:.17g},{cy:.17g},"
                f"{c.dist:.17g},{int(c.subgrid)}\n"
            )
