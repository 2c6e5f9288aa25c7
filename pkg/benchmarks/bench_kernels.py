"""Benchmark the pair-sum kernels: numba backend vs numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--resolutions 32 48 64] [--repeat 3]

Times the truncated (windowed) and all-pairs kernels on the unit square for
a small function batch and prints a table with the speedup. The numba path
is compiled once before timing.
"""

import argparse
import time

import numpy as np

from fracnorm.domain import DomainSpec, build_domain
from fracnorm import kernels


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[32, 48, 64])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not kernels.USING_NUMBA:
        raise SystemExit(
            "numba backend inactive (FRACNORM_BACKEND=numpy?); "
            "the comparison needs both paths importable"
        )

    print(f"{'res':>5} {'nodes':>7} {'kernel':>8} {'numba[s]':>9} "
          f"{'numpy[s]':>9} {'speedup':>8}")
    for res in args.resolutions:
        dom = build_domain(DomainSpec("unit_square"), res)
        d = dom.distance_field().values
        rng = np.random.default_rng(0)
        vals = np.vstack([dom.xs, np.sin(3 * dom.xs + dom.ys),
                          rng.normal(size=dom.node_count)])
        betas = np.array([0.6, 1.0])
        xs = np.ascontiguousarray(dom.xs)
        ys = np.ascontiguousarray(dom.ys)
        qexp = (2.0 + 0.5 * 2.0) / 2.0

        jobs = {
            "tilde": (
                lambda: kernels.tilde_sums(dom, d, vals, 0.5, 2.0, betas, 0.5),
                lambda: kernels._tilde_numpy(xs, ys, d, vals, 2.0, qexp, betas,
                                             0.5, False),
            ),
            "delta": (
                lambda: kernels.delta_sums(dom, d, vals, 0.5, 2.0, betas),
                lambda: kernels._delta_numpy(xs, ys, d, vals, 2.0, qexp, betas),
            ),
        }
        for name, (nb, npy) in jobs.items():
            nb()  # compile outside the timed region
            t_nb = _best_of(nb, args.repeat)
            t_np = _best_of(npy, args.repeat)
            print(f"{res:>5} {dom.node_count:>7} {name:>8} {t_nb:>9.4f} "
                  f"{t_np:>9.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
