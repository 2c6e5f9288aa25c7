"""Bounded planar domains on uniform node grids.

Provides the domain catalog (unit square, disk, L-shape, power cusp,
general polygon), strict interior masks on uniform grids, exact or
polyline-based distance-to-boundary fields, and the symmetric pairwise
weight min(d(x), d(y)).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "DomainSpec",
    "GridDomain",
    "DistanceField",
    "build_domain",
    "distance_to_boundary",
    "delta_weight",
    "export_distance_csv",
]

DOMAIN_KINDS = ("unit_square", "disk", "l_shape", "power_cusp", "polygon")

# Unit square with the closed upper-right quarter removed.
L_SHAPE_VERTICES = (
    (0.0, 0.0),
    (1.0, 0.0),
    (1.0, 0.5),
    (0.5, 0.5),
    (0.5, 1.0),
    (0.0, 1.0),
)


class DomainError(ValueError):
    """Invalid domain specification or empty discretization."""


def _segments_intersect(p, q, r, s):
    """Proper/improper intersection test for segments pq and rs."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 1e-15:
            return 1
        if v < -1e-15:
            return -1
        return 0

    o1 = orient(p, q, r)
    o2 = orient(p, q, s)
    o3 = orient(r, s, p)
    o4 = orient(r, s, q)
    if o1 != o2 and o3 != o4:
        return True
    return False


@dataclass(frozen=True)
class DomainSpec:
    """Analytic description of a bounded open planar domain."""

    kind: str
    radius: float = 1.0
    gamma: float = 2.0
    vertices: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.kind == "disk" and not self.radius > 0:
            raise DomainError("disk radius must be positive")
        if self.kind == "power_cusp" and not self.gamma > 1:
            raise DomainError("power_cusp exponent must exceed 1")
        if self.kind == "polygon":
            v = self.vertices
            if v is None or len(v) < 3:
                raise DomainError("polygon needs at least 3 vertices")
            object.__setattr__(self, "vertices", tuple(tuple(map(float, p)) for p in v))
            self._check_simple()
        if self.kind == "l_shape":
            object.__setattr__(self, "vertices", L_SHAPE_VERTICES)

    def _check_simple(self):
        v = self.vertices
        n = len(v)
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                c, dd = v[j], v[(j + 1) % n]
                if _segments_intersect(a, b, c, dd):
                    raise DomainError("polygon must be simple (non self-intersecting)")

    # -- geometry -----------------------------------------------------------

    def bounding_box(self):
        """(x0, y0, x1, y1) of the smallest axis-aligned box containing the domain."""
        if self.kind == "unit_square":
            return (0.0, 0.0, 1.0, 1.0)
        if self.kind == "disk":
            r = self.radius
            return (-r, -r, r, r)
        if self.kind == "power_cusp":
            return (0.0, -1.0, 1.0, 1.0)
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def contains(self, x, y):
        """Strict interior membership for arrays of coordinates."""
        shape = np.shape(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.kind == "unit_square":
            out = (x > 0) & (x < 1) & (y > 0) & (y < 1)
        elif self.kind == "disk":
            out = x * x + y * y < self.radius * self.radius
        elif self.kind == "l_shape":
            out = (x > 0) & (x < 1) & (y > 0) & (y < 1) & ((x < 0.5) | (y < 0.5))
        elif self.kind == "power_cusp":
            strip = (x > 0) & (x < 1)
            out = np.zeros(x.shape, dtype=bool)
            out[strip] = np.abs(y[strip]) < x[strip] ** self.gamma
        else:
            out = self._polygon_contains(x, y)
        return out.reshape(shape) if shape else bool(out[0])

    def _polygon_contains(self, x, y):
        # Even-odd ray casting; nodes exactly on an edge count as exterior.
        v = np.asarray(self.vertices)
        n = len(v)
        x = np.atleast_1d(x)
        y = np.atleast_1d(y)
        inside = np.zeros(x.shape, dtype=bool)
        on_edge = np.zeros(x.shape, dtype=bool)
        for i in range(n):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % n]
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < np.where(crosses, xint, np.inf))
            # point-on-segment detection
            dx, dy = x2 - x1, y2 - y1
            ll = dx * dx + dy * dy
            t = ((x - x1) * dx + (y - y1) * dy) / ll
            t = np.clip(t, 0.0, 1.0)
            dist2 = (x1 + t * dx - x) ** 2 + (y1 + t * dy - y) ** 2
            on_edge |= dist2 < 1e-28
        return inside & ~on_edge

    def boundary_polyline(self, spacing):
        """Boundary as segments shaped (M, 4): x1, y1, x2, y2.

        Straight edges are kept exact; the cusp arcs are discretized with
        vertex spacing at most `spacing` along the curve.
        """
        if self.kind == "unit_square":
            pts = [(0, 0), (1, 0), (1, 1), (0, 1)]
            return _close_polyline(pts)
        if self.kind in ("l_shape", "polygon"):
            return _close_polyline(list(self.vertices))
        if self.kind == "disk":
            # circle handled analytically; polyline only as a fallback
            r = self.radius
            n = max(16, int(np.ceil(2 * np.pi * r / spacing)))
            th = np.linspace(0.0, 2 * np.pi, n + 1)
            pts = list(zip(r * np.cos(th[:-1]), r * np.sin(th[:-1])))
            return _close_polyline(pts)
        # power cusp: two arcs y = +-x**gamma plus the right edge
        g = self.gamma
        slope_max = np.sqrt(1.0 + g * g)
        dx = spacing / slope_max
        n = max(8, int(np.ceil(1.0 / dx)))
        xs = np.linspace(0.0, 1.0, n + 1)
        top = np.column_stack([xs, xs**g])
        segs = []
        segs.append(np.column_stack([top[:-1], top[1:]]))
        bot = np.column_stack([xs, -(xs**g)])
        segs.append(np.column_stack([bot[:-1], bot[1:]]))
        segs.append(np.array([[1.0, -1.0, 1.0, 1.0]]))
        return np.vstack(segs)

    # -- serialization ------------------------------------------------------

    def to_json(self, resolution=None):
        obj = {"kind": self.kind}
        if self.kind == "disk":
            obj["radius"] = self.radius
        if self.kind == "power_cusp":
            obj["gamma"] = self.gamma
        if self.kind == "polygon":
            obj["vertices"] = [list(p) for p in self.vertices]
        if resolution is not None:
            obj["resolution"] = int(resolution)
        return json.dumps(obj)

    @staticmethod
    def from_json(text):
        """Parse a spec; returns (DomainSpec, resolution or None)."""
        obj = json.loads(text) if isinstance(text, str) else dict(text)
        return DomainSpec.from_dict(obj)

    @staticmethod
    def from_dict(obj):
        obj = dict(obj)
        resolution = obj.pop("resolution", None)
        kind = obj.pop("kind", None)
        if kind is None:
            raise DomainError("domain spec missing 'kind'")
        kwargs = {}
        if "radius" in obj:
            kwargs["radius"] = float(obj.pop("radius"))
        if "gamma" in obj:
            kwargs["gamma"] = float(obj.pop("gamma"))
        if "vertices" in obj:
            kwargs["vertices"] = tuple(tuple(p) for p in obj.pop("vertices"))
        if obj:
            raise DomainError(f"unknown domain spec fields: {sorted(obj)}")
        return DomainSpec(kind=kind, **kwargs), resolution


def _close_polyline(pts):
    pts = [tuple(map(float, p)) for p in pts]
    arr = np.asarray(pts + [pts[0]])
    return np.column_stack([arr[:-1], arr[1:]])


class GridDomain:
    """A domain spec sampled on a uniform square-cell node grid.

    Nodes sit at origin + (i, j) * h; `interior_mask` marks nodes strictly
    inside the analytic domain. Immutable after construction.
    """

    def __init__(self, spec, resolution):
        if resolution < 2:
            raise DomainError("resolution must be at least 2")
        self.spec = spec
        self.resolution = int(resolution)
        x0, y0, x1, y1 = spec.bounding_box()
        ext = max(x1 - x0, y1 - y0)
        self.h = ext / (self.resolution - 1)
        self.origin = (x0, y0)
        self.nx = int(np.ceil((x1 - x0) / self.h - 1e-12)) + 1
        self.ny = int(np.ceil((y1 - y0) / self.h - 1e-12)) + 1
        xs = x0 + np.arange(self.nx) * self.h
        ys = y0 + np.arange(self.ny) * self.h
        X, Y = np.meshgrid(xs, ys)  # shape (ny, nx), row-major in y
        self.interior_mask = spec.contains(X, Y)
        if not self.interior_mask.any():
            raise DomainError(
                f"empty interior: resolution {resolution} too coarse for {spec.kind}"
            )
        self.flat_index = np.full((self.ny, self.nx), -1, dtype=np.int64)
        iy, ix = np.nonzero(self.interior_mask)
        self.flat_index[iy, ix] = np.arange(iy.size)
        self.node_ix = ix.astype(np.int64)
        self.node_iy = iy.astype(np.int64)
        self.xs = X[iy, ix]
        self.ys = Y[iy, ix]
        self.node_count = iy.size
        self._mask_prefix = None
        self._segments = None
        self._distance = None

    # -- helpers ------------------------------------------------------------

    def interior_points(self):
        return np.column_stack([self.xs, self.ys])

    @property
    def cell_weight(self):
        """Midpoint-cell quadrature weight per interior node."""
        return self.h * self.h

    def mask_prefix_sum(self):
        """2D inclusive prefix sum of the interior mask, padded with a zero row/col."""
        if self._mask_prefix is None:
            p = np.zeros((self.ny + 1, self.nx + 1), dtype=np.int64)
            p[1:, 1:] = np.cumsum(np.cumsum(self.interior_mask, axis=0), axis=1)
            self._mask_prefix = p
        return self._mask_prefix

    def count_interior_in_index_box(self, ix0, ix1, iy0, iy1):
        """Number of interior nodes with ix0<=ix<=ix1 and iy0<=iy<=iy1."""
        ix0 = max(ix0, 0)
        iy0 = max(iy0, 0)
        ix1 = min(ix1, self.nx - 1)
        iy1 = min(iy1, self.ny - 1)
        if ix0 > ix1 or iy0 > iy1:
            return 0
        p = self.mask_prefix_sum()
        return int(
            p[iy1 + 1, ix1 + 1] - p[iy0, ix1 + 1] - p[iy1 + 1, ix0] + p[iy0, ix0]
        )

    def boundary_segments(self):
        """Cached boundary polyline with vertex spacing <= h/4."""
        if self._segments is None:
            self._segments = self.spec.boundary_polyline(self.h / 4.0)
        return self._segments

    def distance_at(self, x, y):
        """Distance to the boundary at arbitrary points.

        Closed form for the square and disk, exact segment distance to the
        boundary polyline otherwise.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        kind = self.spec.kind
        if kind == "unit_square":
            return np.minimum.reduce([x, 1.0 - x, y, 1.0 - y])
        if kind == "disk":
            return self.spec.radius - np.sqrt(x * x + y * y)
        return _points_to_segments_distance(x, y, self.boundary_segments())

    def rect_boundary_distance(self, x0, y0, x1, y1):
        """Distance from the closed rectangle [x0,x1]x[y0,y1] to the boundary."""
        kind = self.spec.kind
        if kind == "disk":
            r = self.spec.radius
            corners = np.array([[x0, y0], [x1, y0], [x0, y1], [x1, y1]])
            rmax = np.sqrt((corners**2).sum(axis=1)).max()
            if rmax < r:
                return r - rmax
            # closest point of the rectangle to the center
            cx = min(max(0.0, x0), x1)
            cy = min(max(0.0, y0), y1)
            rmin = np.hypot(cx, cy)
            if rmin > r:
                return rmin - r
            return 0.0
        segs = self.boundary_segments()
        return _segments_to_rect_distance(segs, x0, y0, x1, y1)

    def distance_field(self):
        """Cached DistanceField for this grid."""
        if self._distance is None:
            self._distance = distance_to_boundary(self)
        return self._distance


@dataclass(frozen=True)
class DistanceField:
    """Boundary distance per interior node (aligned with GridDomain ordering)."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.domain.node_count,):
            raise DomainError("distance field size must match interior node count")


def build_domain(spec, resolution):
    """Discretize `spec` on a uniform grid with `resolution` nodes per axis.

    Node coordinates are reproducible bit-exactly from (spec, resolution).
    Raises DomainError when the interior is empty at this resolution.
    """
    return GridDomain(spec, resolution)


def distance_to_boundary(dom):
    """Distance-to-boundary field at the interior nodes of `dom`."""
    vals = dom.distance_at(dom.xs, dom.ys)
    if not np.all(vals > 0):
        raise DomainError("non-positive boundary distance at an interior node")
    return DistanceField(domain=dom, values=vals)


def delta_weight(dx, dy):
    """Symmetric pairwise weight min(dx, dy); inputs must be positive."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    if np.any(dx <= 0) or np.any(dy <= 0):
        raise DomainError("delta_weight requires positive distances")
    out = np.minimum(dx, dy)
    return float(out) if out.ndim == 0 else out


def export_distance_csv(dfield, path):
    """Write (x, y, d) rows with 17 significant digits."""
    dom = dfield.domain
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("x,y,d\n")
        for x, y, d in zip(dom.xs, dom.ys, dfield.values):
            f.write(f"{x:.17g},{y:.17g},{d:.17g}\n")


# -- segment distance helpers ----------------------------------------------


def _points_to_segments_distance(x, y, segs, chunk=512):
    """Min distance from each point to a set of segments (vectorized, chunked)."""
    scalar = np.isscalar(x) or (np.asarray(x).ndim == 0)
    px = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    py = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    ll = np.where(ll == 0, 1.0, ll)
    out = np.empty(px.size)
    for i0 in range(0, px.size, chunk):
        sl = slice(i0, min(i0 + chunk, px.size))
        dxa = px[sl, None] - ax[None, :]
        dya = py[sl, None] - ay[None, :]
        t = (dxa * ex[None, :] + dya * ey[None, :]) / ll[None, :]
        t = np.clip(t, 0.0, 1.0)
        qx = dxa - t * ex[None, :]
        qy = dya - t * ey[None, :]
        out[sl] = np.sqrt((qx * qx + qy * qy).min(axis=1))
    shaped = out.reshape(np.shape(x)) if not scalar else float(out[0])
    return shaped


def _segments_to_rect_distance(segs, x0, y0, x1, y1):
    """Min distance between any boundary segment and a closed rectangle."""
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]

    inside_a = (ax >= x0) & (ax <= x1) & (ay >= y0) & (ay <= y1)
    inside_b = (bx >= x0) & (bx <= x1) & (by >= y0) & (by <= y1)
    if np.any(inside_a | inside_b):
        return 0.0

    rect_edges = np.array(
        [
            [x0, y0, x1, y0],
            [x1, y0, x1, y1],
            [x1, y1, x0, y1],
            [x0, y1, x0, y0],
        ]
    )
    if _any_segment_pair_intersects(segs, rect_edges):
        return 0.0

    # Min over segment endpoints to the (solid) rectangle.
    pxs = np.concatenate([ax, bx])
    pys = np.concatenate([ay, by])
    cx = np.clip(pxs, x0, x1)
    cy = np.clip(pys, y0, y1)
    d1 = np.sqrt((pxs - cx) ** 2 + (pys - cy) ** 2).min()

    # Min over rectangle corners to the segments.
    corners_x = np.array([x0, x1, x1, x0])
    corners_y = np.array([y0, y0, y1, y1])
    d2 = _points_to_segments_distance(corners_x, corners_y, segs).min()
    return float(min(d1, d2))


def _any_segment_pair_intersects(segs, edges):
    """True if any segment in `segs` crosses any rectangle edge."""
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    for ex0, ey0, ex1, ey1 in edges:
        d1 = _cross_sign(ex0, ey0, ex1, ey1, ax, ay)
        d2 = _cross_sign(ex0, ey0, ex1, ey1, bx, by)
        d3 = _cross_sign(ax, ay, bx, by, ex0, ey0)
        d4 = _cross_sign(ax, ay, bx, by, ex1, ey1)
        hit = (d1 * d2 <= 0) & (d3 * d4 <= 0) & ~((d1 == 0) & (d2 == 0))
        if np.any(hit):
            return True
    return False


def _cross_sign(x0, y0, x1, y1, px, py):
    return np.sign((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0))
