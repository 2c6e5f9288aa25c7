"""Experiment configuration, verification suites, and CSV emission.

Each suite measures a family of quantities, writes one CSV of raw values,
and contributes pass/fail assertion rows to a summary CSV. Runs are
deterministic: fixed iteration orders, a seeded generator for the random
triples, and 17-significant-digit formatting.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainSpec, DomainError, build_domain
from .norms import (
    GridFunction,
    weighted_lp_norm,
    w1p_weighted_norm,
    tilde_seminorm_batch,
    delta_seminorm_batch,
    bbm_ratio,
)
from . import kernels
from . import whitney as wh
from . import kfunctional as kf
from .functions import function_library, EQUIVALENCE_SET, BBM_SET

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "parse_config",
    "run_suite",
    "SUITE_NAMES",
]

SUITE_NAMES = (
    "whitney-props",
    "pou-props",
    "lemma21",
    "remark22",
    "lemma31",
    "kfunc",
    "theorem11",
    "bbm",
)


class ConfigError(ValueError):
    """Configuration parsing/validation failure, naming the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainSpec
    resolution: int
    s_values: tuple
    p: float
    alpha_values: tuple
    tau_values: tuple
    function_ids: tuple
    lambda_count: int
    lambda_min: object
    lambda_max: float
    suites: tuple
    seed: int
    out_dir: str
    parallel: bool = False


def parse_config(source):
    """Parse a JSON config (path, text, or dict) into an ExperimentConfig."""
    if isinstance(source, dict):
        obj = dict(source)
    else:
        text = source
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"config is not valid JSON (line {e.lineno}, column {e.colno}): {e.msg}"
            ) from e
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")

    def take(name, default=None, required=False):
        if name in obj:
            return obj.pop(name)
        if required:
            raise ConfigError(f"config field '{name}' is required")
        return default

    dom_obj = take("domain", required=True)
    try:
        spec, res_inline = DomainSpec.from_dict(dom_obj)
    except DomainError as e:
        raise ConfigError(f"config field 'domain': {e}") from e
    resolution = take("resolution", res_inline)
    if resolution is None:
        raise ConfigError("config field 'resolution' is required")
    resolution = int(resolution)
    if resolution < 8:
        raise ConfigError("config field 'resolution' must be at least 8")

    def float_list(name, default):
        raw = take(name, default)
        if isinstance(raw, (int, float)):
            raw = [raw]
        try:
            return tuple(float(v) for v in raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"config field '{name}' must be a list of numbers") from e

    s_values = float_list("s", [0.5])
    for s in s_values:
        if not 0 < s < 1:
            raise ConfigError("config field 's' entries must lie in (0, 1)")
    p = float(take("p", 2.0))
    if p < 1:
        raise ConfigError("config field 'p' must be at least 1")
    alpha_values = float_list("alpha", [0.0])
    if any(a < 0 for a in alpha_values):
        raise ConfigError("config field 'alpha' entries must be nonnegative")
    tau_values = float_list("tau", [0.25, 0.5, 0.75])
    if any(not 0 < t < 1 for t in tau_values):
        raise ConfigError("config field 'tau' entries must lie in (0, 1)")

    lib = function_library()
    functions = take("functions", list(EQUIVALENCE_SET))
    if not isinstance(functions, (list, tuple)) or len(functions) == 0:
        raise ConfigError("config field 'functions': no functions selected")
    for fid in functions:
        if fid not in lib:
            raise ConfigError(f"config field 'functions': unknown function id {fid!r}")

    lam_obj = take("lambda_grid", {}) or {}
    if not isinstance(lam_obj, dict):
        raise ConfigError("config field 'lambda_grid' must be an object")
    lambda_count = int(lam_obj.get("count", 32))
    if lambda_count < 4:
        raise ConfigError("config field 'lambda_grid.count' must be at least 4")
    lambda_min = lam_obj.get("min")
    lambda_max = float(lam_obj.get("max", 1.0))

    suites = tuple(take("suites", list(SUITE_NAMES)))
    for sname in suites:
        if sname not in SUITE_NAMES:
            raise ConfigError(f"config field 'suites': unknown suite {sname!r}")

    seed = int(take("seed", 42))
    out_dir = str(take("out_dir", "out"))
    parallel = bool(take("parallel", False))
    if obj:
        raise ConfigError(f"unknown config fields: {sorted(obj)}")
    return ExperimentConfig(
        domain=spec,
        resolution=resolution,
        s_values=s_values,
        p=p,
        alpha_values=alpha_values,
        tau_values=tau_values,
        function_ids=tuple(functions),
        lambda_count=lambda_count,
        lambda_min=lambda_min,
        lambda_max=lambda_max,
        suites=suites,
        seed=seed,
        out_dir=out_dir,
        parallel=parallel,
    )


@dataclass
class Assertion:
    suite: str
    name: str
    measured: float
    bound: str
    passed: bool


class Workspace:
    """Caches shared across suites: grids, distances, samples, K curves."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.lib = function_library()
        self._domains = {}
        self._curves = {}

    def domain(self, resolution=None, spec=None):
        spec = spec or self.cfg.domain
        resolution = resolution or self.cfg.resolution
        key = (spec.kind, getattr(spec, "gamma", None), getattr(spec, "radius", None),
               spec.vertices, resolution)
        if key not in self._domains:
            dom = build_domain(spec, resolution)
            dom.distance_field()
            self._domains[key] = dom
        return self._domains[key]

    def samples(self, dom, fids):
        d = dom.distance_field()
        out = {}
        for fid in fids:
            out[fid] = self.lib[fid].sample(dom, d)
        return out

    def lambda_grid(self, dom):
        return kf.default_lambda_grid(
            dom, self.cfg.lambda_count, self.cfg.lambda_min, self.cfg.lambda_max
        )

    def k_curves(self, dom, alpha, fids):
        key = (id(dom), float(alpha), tuple(fids))
        if key not in self._curves:
            d = dom.distance_field()
            funcs = self.samples(dom, fids)
            F = np.column_stack([funcs[fid].values for fid in fids])
            lams = self.lambda_grid(dom)
            self._curves[key] = kf.compute_k_curves_batch(dom, d, F, fids, lams, alpha)
        return self._curves[key]


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in header) + "\n")


# -- suites -------------------------------------------------------------------


def _suite_whitney_props(ws):
    cfg = ws.cfg
    dom = ws.domain()
    W = wh.whitney_decompose(dom)
    rep = wh.check_decomposition(W)
    rows = [dict(domain=cfg.domain.kind, resolution=cfg.resolution, **rep)]
    asserts = [
        Assertion("whitney-props", "size_vs_distance_lower", rep["lower_ok"],
                  f"== {rep['n_normal']}", rep["lower_ok"] == rep["n_normal"]),
        Assertion("whitney-props", "size_vs_distance_upper", rep["upper_ok"],
                  f"== {rep['n_normal']}", rep["upper_ok"] == rep["n_normal"]),
        Assertion("whitney-props", "parent_maximality", rep["parent_maximal"],
                  f"== {rep['n_with_parent']}", rep["parent_maximal"] == rep["n_with_parent"]),
        Assertion("whitney-props", "neighbor_ratio", rep["ratio_ok"],
                  f"== {rep['touching_pairs']}", rep["ratio_ok"] == rep["touching_pairs"]),
        Assertion("whitney-props", "node_coverage", rep["nodes_covered"],
                  f"== {rep['nodes_total']}", rep["nodes_covered"] == rep["nodes_total"]),
    ]
    return rows, asserts


def _suite_pou_props(ws):
    cfg = ws.cfg
    dom = ws.domain()
    d = dom.distance_field()
    W = wh.whitney_decompose(dom)
    far = d.values > 2.0 * dom.h
    rows = []
    grad_consts = []
    overlaps = []
    asserts = []
    for lam in (1.0, 0.5, 0.25):
        R = wh.refine_lambda(W, lam)
        edges = np.array([c.edge for c in W.cubes])[R.parent_index]
        bracket_ok = bool(
            np.all(0.5 * lam * edges <= R.ell) and np.all(R.ell <= lam * edges)
        )
        cov = wh.expanded_cover(R)
        pou = wh.partition_of_unity(cov)
        psum = pou.partition_sum()
        perr = float(np.abs(psum[far] - 1.0).max()) if far.any() else 0.0
        mg = pou.max_gradient_scan()
        gconst = float(np.nanmax(mg * R.ell))
        checked, bad = wh.distance_comparability(cov, d)
        rows.append(dict(
            lam=lam, cells=R.n_cells, bracket_ok=int(bracket_ok),
            max_overlap=int(cov.overlap.max()), partition_err=perr,
            max_grad_ell=gconst, dist_comp_checked=checked, dist_comp_bad=bad,
        ))
        grad_consts.append(gconst)
        overlaps.append(int(cov.overlap.max()))
        asserts.append(Assertion("pou-props", f"refine_bracket_lam_{lam:g}",
                                 int(bracket_ok), "exact", bracket_ok))
        asserts.append(Assertion("pou-props", f"partition_sum_lam_{lam:g}",
                                 perr, "<= 1e-10", perr <= 1e-10))
        asserts.append(Assertion("pou-props", f"distance_comparability_lam_{lam:g}",
                                 bad, "== 0", bad == 0))
    spread = max(grad_consts) / min(grad_consts)
    asserts.append(Assertion("pou-props", "grad_const_stability", spread,
                             "<= 2", spread <= 2.0))
    ospread = max(overlaps) / min(overlaps)
    asserts.append(Assertion("pou-props", "overlap_stability", ospread,
                             "<= 2", ospread <= 2.0))
    return rows, asserts


def _full_norm_table(ws, dom, fids, s, alpha, tau=0.5):
    """Full norms (L^p part + seminorm) for a function batch.

    Returns three variants: truncated sum with d(x)^beta weight, truncated
    sum with min(d(x),d(y))^beta weight, and the all-pairs min-weight sum.
    The second is a term-wise subset of the third, so their ratio is a
    certified lower bound of one.
    """
    cfg = ws.cfg
    p = cfg.p
    beta = (alpha + s) * p
    d = dom.distance_field()
    funcs = ws.samples(dom, fids)
    F = np.vstack([funcs[fid].values for fid in fids])
    til = tilde_seminorm_batch(dom, d, F, s, p, [beta], tau)[:, 0]
    til_min = tilde_seminorm_batch(dom, d, F, s, p, [beta], tau,
                                   use_delta_weight=True)[:, 0]
    dlt = delta_seminorm_batch(dom, d, F, s, p, [beta])[:, 0]
    lps = np.array([weighted_lp_norm(funcs[fid], d, alpha * p, p) for fid in fids])
    return lps + til, lps + til_min, lps + dlt


def _suite_lemma21(ws):
    cfg = ws.cfg
    rows = []
    asserts = []
    fids = [f for f in cfg.function_ids if f != "const_1"]
    ratio_by_combo = {}
    for resolution in (cfg.resolution, 2 * cfg.resolution):
        dom = ws.domain(resolution)
        for s in cfg.s_values:
            for alpha in cfg.alpha_values:
                tilde_full, tilde_min_full, delta_full = _full_norm_table(
                    ws, dom, fids, s, alpha
                )
                for fid, tv, tm, dv in zip(fids, tilde_full, tilde_min_full,
                                           delta_full):
                    ratio = dv / tm
                    rows.append(dict(s=s, alpha=alpha, resolution=resolution,
                                     function_id=fid, tilde_full=tv,
                                     tilde_min_full=tm, delta_full=dv,
                                     ratio=ratio))
                    ratio_by_combo.setdefault((s, alpha, fid), {})[resolution] = ratio
    ratios_base = [v[cfg.resolution] for v in ratio_by_combo.values()]
    rmin = min(ratios_base)
    rmax = max(ratios_base)
    asserts.append(Assertion("lemma21", "delta_over_tilde_lower", rmin,
                             ">= 1", rmin >= 1.0))
    cmeas = rmax
    stability = max(
        max(v[cfg.resolution], v[2 * cfg.resolution])
        / min(v[cfg.resolution], v[2 * cfg.resolution])
        for v in ratio_by_combo.values()
    )
    asserts.append(Assertion("lemma21", "constant_measured", cmeas, "recorded", True))
    asserts.append(Assertion("lemma21", "constant_doubling_stability", stability,
                             "<= 2", stability <= 2.0))

    # term-wise weight comparability on the restricted region
    dom = ws.domain()
    d = dom.distance_field()
    wmin, wmax = kernels.restricted_weight_ratio_range(dom, d.values, 0.5)
    asserts.append(Assertion("lemma21", "weight_ratio_min", wmin,
                             ">= 0.5", wmin >= 0.5 * (1.0 - 1e-12)))
    asserts.append(Assertion("lemma21", "weight_ratio_max", wmax,
                             "<= 1", wmax <= 1.0))

    # off-region remainder bounded by the weighted L^p mass, stable in resolution
    s0 = cfg.s_values[0]
    off_ratios = {}
    for resolution in (max(cfg.resolution // 2, 8), cfg.resolution, 2 * cfg.resolution):
        dom_r = ws.domain(resolution)
        d_r = dom_r.distance_field()
        betas = [(a + s0) * cfg.p for a in cfg.alpha_values]
        Wsum = kernels.offregion_weight_sums(dom_r, d_r.values, s0, cfg.p, betas)
        funcs = ws.samples(dom_r, fids)
        for bi, alpha in enumerate(cfg.alpha_values):
            for fid in fids:
                fv = np.abs(funcs[fid].values) ** cfg.p
                num = float((fv * Wsum[bi]).sum()) * dom_r.cell_weight**2
                den = float((fv * d_r.values ** (alpha * cfg.p)).sum()) * dom_r.cell_weight
                off_ratios.setdefault((alpha, fid), {})[resolution] = num / den
    off_stab = max(
        max(v.values()) / min(v.values()) for v in off_ratios.values()
    )
    asserts.append(Assertion("lemma21", "offregion_constant_stability", off_stab,
                             "<= 2", off_stab <= 2.0))
    return rows, asserts


def _suite_remark22(ws):
    cfg = ws.cfg
    taus = sorted(cfg.tau_values)
    fids = [f for f in cfg.function_ids if f != "const_1"]
    p = cfg.p
    rows = []
    asserts = []
    full = {}
    for resolution in (cfg.resolution, 2 * cfg.resolution):
        dom = ws.domain(resolution)
        d = dom.distance_field()
        funcs = ws.samples(dom, fids)
        F = np.vstack([funcs[fid].values for fid in fids])
        lps = np.array([weighted_lp_norm(funcs[fid], d, 0.0, p) for fid in fids])
        for s in cfg.s_values:
            beta = s * p
            semis = {}
            for tau in taus:
                semis[tau] = tilde_seminorm_batch(dom, d, F, s, p, [beta], tau)[:, 0]
                for fi, fid in enumerate(fids):
                    rows.append(dict(resolution=resolution, s=s, tau=tau,
                                     function_id=fid, tilde=semis[tau][fi],
                                     full_norm=lps[fi] + semis[tau][fi]))
            if resolution == cfg.resolution:
                mono = all(
                    np.all(semis[taus[i]] <= semis[taus[i + 1]])
                    for i in range(len(taus) - 1)
                )
                asserts.append(Assertion("remark22", f"tau_monotonicity_s_{s:g}",
                                         int(mono), "exact", bool(mono)))
            for tau in taus:
                for fi, fid in enumerate(fids):
                    full.setdefault((s, tau, fid), {})[resolution] = (
                        lps[fi] + semis[tau][fi]
                    )
    stability = 1.0
    for (s, tau, fid), by_res in full.items():
        ref = full[(s, 0.5, fid)] if (s, 0.5, fid) in full else None
        if ref is None:
            continue
        r1 = by_res[cfg.resolution] / ref[cfg.resolution]
        r2 = by_res[2 * cfg.resolution] / ref[2 * cfg.resolution]
        stability = max(stability, max(r1, r2) / min(r1, r2))
    asserts.append(Assertion("remark22", "tau_ratio_doubling_stability", stability,
                             "<= 2", stability <= 2.0))
    return rows, asserts


def _suite_lemma31(ws, n_triples=100):
    cfg = ws.cfg
    dom = ws.domain()
    d = dom.distance_field()
    rng = np.random.default_rng(cfg.seed)
    fids = list(cfg.function_ids)
    rows = []
    worst = 0.0
    for k in range(n_triples):
        fid = fids[int(rng.integers(len(fids)))]
        ang = float(rng.uniform(0.0, 2.0 * math.pi))
        rad = 0.5 * math.sqrt(float(rng.uniform())) * (1.0 - 1e-9)
        w = (rad * math.cos(ang), rad * math.sin(ang))
        t = float(rng.uniform())
        tf = ws.lib[fid]
        phi = lambda x, y, tf=tf: tf.evaluate(dom, x, y) ** 2
        ratio = wh.shift_mass_ratio(dom, phi, w, t, d)
        worst = max(worst, ratio)
        rows.append(dict(triple=k, function_id=fid, wx=w[0], wy=w[1], t=t, ratio=ratio))
    bound = 4.0 * 1.05
    asserts = [Assertion("lemma31", "shift_mass_ratio_worst", worst,
                         "<= 4.2", worst <= bound)]
    return rows, asserts


def _suite_kfunc(ws):
    cfg = ws.cfg
    dom = ws.domain()
    d = dom.distance_field()
    p = cfg.p
    rows = []
    asserts = []
    fids = list(cfg.function_ids)
    funcs = ws.samples(dom, fids)
    curves = ws.k_curves(dom, cfg.alpha_values[0], fids) if p == 2.0 else {
        fid: kf.compute_k_curve(funcs[fid], ws.lambda_grid(dom), p,
                                cfg.alpha_values[0], d)
        for fid in fids
    }
    alpha = cfg.alpha_values[0]
    for fid in fids:
        curve = curves[fid]
        for lam, kv, m, it, gap in zip(curve.lambdas, curve.values, curve.methods,
                                       curve.iterations, curve.gaps):
            rows.append(dict(function_id=fid, lam=lam, K=kv, method=m,
                             iterations=it, objective_gap=gap))
        K = curve.values
        lams = curve.lambdas
        f = funcs[fid]
        flp = weighted_lp_norm(f, d, alpha * p, p)
        fw = w1p_weighted_norm(f, d, alpha * p, (alpha + 1.0) * p, p)
        if flp == 0.0:
            continue
        mono_viol = float(np.max(np.maximum(K[:-1] - K[1:], 0.0) / np.maximum(K[:-1], 1e-300)))
        asserts.append(Assertion("kfunc", f"K_monotone_{fid}", mono_viol,
                                 "<= 0.01", mono_viol <= 0.01))
        conc_viol = 0.0
        for i in range(1, len(lams) - 1):
            t = (lams[i] - lams[i - 1]) / (lams[i + 1] - lams[i - 1])
            chord = (1 - t) * K[i - 1] + t * K[i + 1]
            if chord > 0:
                conc_viol = max(conc_viol, (chord - K[i]) / chord)
        asserts.append(Assertion("kfunc", f"K_concave_{fid}", conc_viol,
                                 "<= 0.01", conc_viol <= 0.01))
        ub_viol = float(np.max(K / np.minimum(flp, lams * fw))) - 1.0
        asserts.append(Assertion("kfunc", f"K_upper_bounds_{fid}", ub_viol,
                                 "<= 0.01", ub_viol <= 0.01))

    # constructive splitting dominates the optimized one, within a bounded factor
    W = wh.whitney_decompose(dom)
    for fid in ("linear_x1", "sine2d"):
        if fid not in funcs:
            continue
        for lam in (0.5, 0.25, 0.125):
            dv = kf.k_variational(funcs[fid], lam, p, alpha, d)
            dc = kf.k_constructive(funcs[fid], lam, p, alpha, d, decomposition=W)
            rows.append(dict(function_id=fid, lam=lam, K=dc.value, method="constructive",
                             iterations=0, objective_gap=0.0))
            ratio = dc.value / dv.value if dv.value > 0 else math.inf
            asserts.append(Assertion("kfunc", f"constructive_ge_variational_{fid}_lam_{lam:g}",
                                     ratio, ">= 1", ratio >= 1.0 - 1e-9))
            asserts.append(Assertion("kfunc", f"constructive_ratio_{fid}_lam_{lam:g}",
                                     ratio, "<= 10", ratio <= 10.0))

    # solver matches the one-parameter family infimum on a solvable instance
    if "linear_x1" in funcs and p == 2.0:
        f = funcs["linear_x1"]
        lam0 = 0.1
        family = [
            kf.k_objective(c * f.values, f, d, lam0, p, alpha)[0]
            for c in np.arange(0.0, 1.0 + 1e-12, 0.01)
        ]
        dec = kf.k_variational(f, lam0, p, alpha, d)
        rel = dec.value / min(family)
        asserts.append(Assertion("kfunc", "family_oracle_match", rel,
                                 "<= 1.01", rel <= 1.01))

    # homogeneity and subadditivity at a fixed lambda
    if len(fids) >= 2 and p == 2.0:
        fa, fb = funcs[fids[0]], funcs[fids[1]]
        lam0 = 0.25
        ka = kf.k_variational(fa, lam0, p, alpha, d).value
        k2a = kf.k_variational(GridFunction(dom, 2.0 * fa.values), lam0, p, alpha, d).value
        if ka > 0:
            hom = k2a / (2.0 * ka)
            asserts.append(Assertion("kfunc", "K_homogeneity", hom,
                                     "in [0.99, 1.01]", 0.99 <= hom <= 1.01))
        kb = kf.k_variational(fb, lam0, p, alpha, d).value
        kab = kf.k_variational(GridFunction(dom, fa.values + fb.values),
                               lam0, p, alpha, d).value
        sub = kab / (ka + kb) if ka + kb > 0 else 0.0
        asserts.append(Assertion("kfunc", "K_subadditive", sub,
                                 "<= 1.01", sub <= 1.01))

    # interpolation norm: quadrature refinement stability and homogeneity
    if "linear_x1" in funcs:
        f = funcs["linear_x1"]
        s0 = cfg.s_values[0]
        lg1 = kf.default_lambda_grid(dom, cfg.lambda_count, cfg.lambda_min, cfg.lambda_max)
        lg2 = kf.default_lambda_grid(dom, 2 * cfg.lambda_count, cfg.lambda_min, cfg.lambda_max)
        v1 = kf.interpolation_norm(f, s0, p, alpha, d, lg1).value
        v2 = kf.interpolation_norm(f, s0, p, alpha, d, lg2).value
        stab = max(v1, v2) / min(v1, v2) - 1.0
        asserts.append(Assertion("kfunc", "interp_norm_grid_stability", stab,
                                 "<= 0.05", stab <= 0.05))
        f2 = GridFunction(dom, 2.0 * f.values)
        vh = kf.interpolation_norm(f2, s0, p, alpha, d, lg1).value
        hom = vh / (2.0 * v1)
        asserts.append(Assertion("kfunc", "interp_norm_homogeneity", hom,
                                 "in [0.99, 1.01]", 0.99 <= hom <= 1.01))
    return rows, asserts


def _suite_theorem11(ws):
    cfg = ws.cfg
    p = cfg.p
    rows = []
    asserts = []
    spreads = {}
    for resolution in (cfg.resolution, 2 * cfg.resolution):
        dom = ws.domain(resolution)
        d = dom.distance_field()
        fids = [f for f in cfg.function_ids if f != "const_1"]
        funcs = ws.samples(dom, fids)
        lams = ws.lambda_grid(dom)
        for alpha in cfg.alpha_values:
            curves = ws.k_curves(dom, alpha, tuple(fids))
            for s in cfg.s_values:
                table = kf.equivalence_report(dom, d, funcs, s, p, alpha,
                                              lambdas=lams, curves=curves)
                ratios = [r["ratio_it"] for r in table]
                spread = max(ratios) / min(ratios)
                spreads.setdefault((s, alpha), {})[resolution] = spread
                for r in table:
                    rows.append(dict(s=s, alpha=alpha, resolution=resolution, **r))
    for (s, alpha), by_res in sorted(spreads.items()):
        base = by_res[cfg.resolution]
        asserts.append(Assertion("theorem11", f"ratio_spread_s_{s:g}_a_{alpha:g}",
                                 base, "< 25", base < 25.0))
        change = max(by_res.values()) / min(by_res.values())
        asserts.append(Assertion("theorem11",
                                 f"spread_doubling_stability_s_{s:g}_a_{alpha:g}",
                                 change, "< 2", change < 2.0))
    return rows, asserts


def _suite_bbm(ws):
    cfg = ws.cfg
    dom = ws.domain()
    d = dom.distance_field()
    rows = []
    asserts = []
    ratios_at = {}
    fids = [fid for fid in BBM_SET if fid in ws.lib]
    for s in (0.8, 0.9, 0.95):
        for fid in fids:
            f = ws.lib[fid].sample(dom, d)
            r = bbm_ratio(f, d, s, cfg.p)
            rows.append(dict(s=s, function_id=fid, ratio=r))
            ratios_at.setdefault(s, []).append(r)
    vals = ratios_at[0.95]
    spread = max(vals) / min(vals)
    asserts.append(Assertion("bbm", "ratio_f_independence_s_095", spread,
                             "<= 1.15", spread <= 1.15))
    return rows, asserts


_SUITE_TABLE = {
    "whitney-props": (_suite_whitney_props,
                      ["domain", "resolution", "n_cubes", "n_normal", "n_subgrid",
                       "lower_ok", "upper_ok", "parent_maximal", "n_with_parent",
                       "touching_pairs", "ratio_ok", "nodes_covered", "nodes_total"]),
    "pou-props": (_suite_pou_props,
                  ["lam", "cells", "bracket_ok", "max_overlap", "partition_err",
                   "max_grad_ell", "dist_comp_checked", "dist_comp_bad"]),
    "lemma21": (_suite_lemma21,
                ["s", "alpha", "resolution", "function_id", "tilde_full",
                 "tilde_min_full", "delta_full", "ratio"]),
    "remark22": (_suite_remark22,
                 ["resolution", "s", "tau", "function_id", "tilde", "full_norm"]),
    "lemma31": (_suite_lemma31,
                ["triple", "function_id", "wx", "wy", "t", "ratio"]),
    "kfunc": (_suite_kfunc,
              ["function_id", "lam", "K", "method", "iterations", "objective_gap"]),
    "theorem11": (_suite_theorem11,
                  ["s", "alpha", "resolution", "function_id", "interp_norm",
                   "tilde_norm", "delta_norm", "ratio_it", "ratio_id", "ratio_td"]),
    "bbm": (_suite_bbm, ["s", "function_id", "ratio"]),
}


def run_suite(cfg, echo=print):
    """Execute the selected suites; returns 0 when every assertion passes.

    Writes one CSV per suite plus summary.csv into cfg.out_dir.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    ws = Workspace(cfg)

    def run_one(name):
        fn, header = _SUITE_TABLE[name]
        rows, asserts = fn(ws)
        return name, header, rows, asserts

    results = {}
    if cfg.parallel:
        with ThreadPoolExecutor(max_workers=min(4, len(cfg.suites))) as pool:
            for name, header, rows, asserts in pool.map(run_one, cfg.suites):
                results[name] = (header, rows, asserts)
    else:
        for name in cfg.suites:
            _, header, rows, asserts = run_one(name)
            results[name] = (header, rows, asserts)

    summary = []
    all_ok = True
    for name in cfg.suites:
        header, rows, asserts = results[name]
        _write_csv(os.path.join(cfg.out_dir, f"{name}.csv"), header, rows)
        for a in asserts:
            summary.append(dict(suite=a.suite, assertion=a.name,
                                measured=a.measured, bound=a.bound,
                                verdict="pass" if a.passed else "FAIL"))
            if not a.passed:
                all_ok = False
            if echo:
                echo(f"[{a.suite}] {a.name}: {_fmt(a.measured)} "
                     f"(bound {a.bound}) {'pass' if a.passed else 'FAIL'}")
    summary.append(dict(suite="run", assertion="seed", measured=cfg.seed,
                        bound="recorded", verdict="pass"))
    _write_csv(os.path.join(cfg.out_dir, "summary.csv"),
               ["suite", "assertion", "measured", "bound", "verdict"], summary)
    return 0 if all_ok else 1
