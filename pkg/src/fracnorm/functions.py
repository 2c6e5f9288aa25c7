"""Registered test functions with closed forms evaluable at arbitrary points.

Functions may depend on the boundary distance (supplied by the domain), so
they stay finite at interior nodes even for negative powers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .norms import GridFunction

__all__ = [
    "TestFunction",
    "function_library",
    "EQUIVALENCE_SET",
    "BBM_SET",
    "ORACLE_SET",
]


@dataclass(frozen=True)
class TestFunction:
    """Closed-form scalar field; `needs_distance` marks d(x)-dependent forms."""

    fid: str
    fn: object
    grad: object = None
    needs_distance: bool = False

    def evaluate(self, dom, x, y):
        """Evaluate at arbitrary points of the domain."""
        if self.needs_distance:
            return np.asarray(self.fn(x, y, dom.distance_at(x, y)), dtype=float)
        return np.asarray(self.fn(x, y), dtype=float)

    def sample(self, dom, d=None):
        """GridFunction of samples at the interior nodes."""
        if self.needs_distance:
            dv = d.values if d is not None else dom.distance_field().values
            return GridFunction(dom, np.asarray(self.fn(dom.xs, dom.ys, dv), dtype=float))
        return GridFunction(dom, np.asarray(self.fn(dom.xs, dom.ys), dtype=float))

    def as_callable(self, dom):
        """Plain (x, y) callable bound to a domain (for quadrature paths)."""
        if self.needs_distance:
            return lambda x, y: np.asarray(self.fn(x, y, dom.distance_at(x, y)), dtype=float)
        return self.fn


def _dist_pow(gamma):
    return TestFunction(
        fid=f"dist_pow_{gamma:g}".replace("-", "m").replace(".", ""),
        fn=lambda x, y, d, g=gamma: d**g,
        needs_distance=True,
    )


def function_library():
    """All registered test functions, keyed by id, in a fixed order."""
    funcs = [
        TestFunction("const_1", lambda x, y: np.ones_like(np.asarray(x, dtype=float)),
                     grad=lambda x, y: (np.zeros_like(x), np.zeros_like(x))),
        TestFunction("linear_x1", lambda x, y: np.asarray(x, dtype=float),
                     grad=lambda x, y: (np.ones_like(x), np.zeros_like(x))),
        TestFunction("linear_sum", lambda x, y: np.asarray(x, dtype=float) + y,
                     grad=lambda x, y: (np.ones_like(x), np.ones_like(x))),
        TestFunction("bilinear", lambda x, y: np.asarray(x, dtype=float) * y,
                     grad=lambda x, y: (np.asarray(y, dtype=float), np.asarray(x, dtype=float))),
        TestFunction("sine2d", lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
                     grad=lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                                        np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))),
        _dist_pow(0.25),
        _dist_pow(0.5),
        _dist_pow(1.0),
        _dist_pow(-0.1),
        TestFunction("osc", lambda x, y, d: d**0.5 * np.sin(8.0 * x), needs_distance=True),
    ]
    return {f.fid: f for f in funcs}


# eight-function set for the norm-equivalence studies (constants excluded:
# their seminorms vanish identically)
EQUIVALENCE_SET = (
    "linear_x1",
    "bilinear",
    "sine2d",
    "dist_pow_025",
    "dist_pow_05",
    "dist_pow_1",
    "dist_pow_m01",
    "osc",
)

# three smooth fields for the gradient-limit diagnostic
BBM_SET = ("linear_x1", "linear_sum", "sine2d")

# five functions for the brute-force seminorm oracle comparison
ORACLE_SET = ("linear_x1", "bilinear", "sine2d", "dist_pow_05", "osc")
