"""Command line interface.

    fracnorm domain|seminorm|whitney|kfunc|verify|bbm --config <path>
             [--out <dir>] [--seed <u64>] [--parallel]
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .domain import export_distance_csv
from .norms import FracParams, norm_report, write_norm_reports_csv, bbm_ratio
from . import whitney as wh
from . import kfunctional as kf
from .harness import ConfigError, Workspace, parse_config, run_suite, _write_csv


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fracnorm",
        description="Weighted fractional norms, Whitney covers, and "
                    "K-functional experiments on planar grid domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("domain", "build the grid domain and export its distance field"),
        ("seminorm", "compute weighted norm reports for the configured functions"),
        ("whitney", "build and export the Whitney decomposition"),
        ("kfunc", "compute K-functional curves for the configured functions"),
        ("verify", "run the configured verification suites"),
        ("bbm", "compute the gradient-limit diagnostic ratios"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--parallel", action="store_true",
                       help="run suites concurrently (verify only)")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.parallel:
        cfg = replace(cfg, parallel=True)
    os.makedirs(cfg.out_dir, exist_ok=True)
    ws = Workspace(cfg)

    if args.command == "verify":
        return run_suite(cfg)

    dom = ws.domain()
    d = dom.distance_field()

    if args.command == "domain":
        path = os.path.join(cfg.out_dir, "distance.csv")
        export_distance_csv(d, path)
        print(f"wrote {path} ({dom.node_count} interior nodes, h={dom.h:.6g})")
        return 0

    if args.command == "whitney":
        W = wh.whitney_decompose(dom)
        path = os.path.join(cfg.out_dir, "whitney.csv")
        wh.export_whitney_csv(W, path)
        rep = wh.check_decomposition(W)
        print(f"wrote {path} ({rep['n_cubes']} cubes, {rep['n_subgrid']} subgrid)")
        return 0

    if args.command == "seminorm":
        funcs = ws.samples(dom, cfg.function_ids)
        reports = []
        for fid in cfg.function_ids:
            for s in cfg.s_values:
                for alpha in cfg.alpha_values:
                    for tau in cfg.tau_values:
                        params = FracParams(s=s, p=cfg.p, alpha=alpha,
                                            beta=(alpha + s) * cfg.p, tau=tau)
                        reports.append(norm_report(funcs[fid], d, params))
        path = os.path.join(cfg.out_dir, "seminorms.csv")
        write_norm_reports_csv(reports, path)
        print(f"wrote {path} ({len(reports)} rows)")
        return 0

    if args.command == "kfunc":
        for alpha in cfg.alpha_values:
            curves = ws.k_curves(dom, alpha, cfg.function_ids)
            for fid in cfg.function_ids:
                path = os.path.join(cfg.out_dir, f"kcurve_{fid}_a{alpha:g}.csv")
                kf.write_k_curve_csv(curves[fid], path)
                print(f"wrote {path}")
        return 0

    if args.command == "bbm":
        rows = []
        for s in (0.8, 0.9, 0.95):
            for fid in cfg.function_ids:
                f = ws.lib[fid].sample(dom, d)
                try:
                    r = bbm_ratio(f, d, s, cfg.p)
                except ValueError:
                    continue
                rows.append(dict(s=s, function_id=fid, ratio=r))
        path = os.path.join(cfg.out_dir, "bbm.csv")
        _write_csv(path, ["s", "function_id", "ratio"], rows)
        print(f"wrote {path} ({len(rows)} rows)")
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
