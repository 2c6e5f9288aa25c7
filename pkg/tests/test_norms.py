import math

import numpy as np
import pytest

from fracnorm.norms import (
    FracParams,
    GridFunction,
    bbm_ratio,
    delta_seminorm,
    gradient,
    norm_report,
    tilde_seminorm,
    tilde_seminorm_batch,
    w1p_weighted_norm,
    weighted_lp_norm,
    write_norm_reports_csv,
)


def brute_tilde(dom, dv, vals, s, p, beta, tau):
    """Independent pure-Python double loop."""
    total = 0.0
    n = dom.node_count
    for i in range(n):
        cutoff = tau * dv[i]
        for j in range(n):
            if i == j:
                continue
            r = math.hypot(dom.xs[i] - dom.xs[j], dom.ys[i] - dom.ys[j])
            if r < cutoff:
                total += abs(vals[i] - vals[j]) ** p / r ** (2 + s * p) * dv[i] ** beta
    return (total * dom.h**4) ** (1.0 / p)


def brute_delta(dom, dv, vals, s, p, beta):
    total = 0.0
    n = dom.node_count
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            r = math.hypot(dom.xs[i] - dom.xs[j], dom.ys[i] - dom.ys[j])
            total += (
                abs(vals[i] - vals[j]) ** p
                / r ** (2 + s * p)
                * min(dv[i], dv[j]) ** beta
            )
    return (total * dom.h**4) ** (1.0 / p)


def test_frac_params_validation():
    FracParams(s=0.5, p=2.0, alpha=0.0, beta=1.0, tau=0.5)
    with pytest.raises(ValueError):
        FracParams(s=1.0, p=2.0)
    with pytest.raises(ValueError):
        FracParams(s=0.5, p=0.5)
    with pytest.raises(ValueError):
        FracParams(s=0.5, p=2.0, alpha=-1.0)
    with pytest.raises(ValueError):
        FracParams(s=0.5, p=2.0, tau=1.0)


def test_grid_function_validation(square16):
    with pytest.raises(ValueError):
        GridFunction(square16, np.zeros(3))
    bad = np.zeros(square16.node_count)
    bad[0] = np.inf
    with pytest.raises(ValueError):
        GridFunction(square16, bad)


def test_lp_norm_zero_and_const(square16):
    d = square16.distance_field()
    zero = GridFunction(square16, np.zeros(square16.node_count))
    assert weighted_lp_norm(zero, d, 0.0, 2.0) == 0.0
    one = GridFunction.from_callable(square16, lambda x, y: np.ones_like(x))
    val = weighted_lp_norm(one, d, 0.0, 2.0)
    assert val == pytest.approx((square16.node_count * square16.h**2) ** 0.5, rel=1e-14)


def test_lp_norm_converges_to_continuum(square16, square64):
    errs = []
    for dom in (square16, square64):
        one = GridFunction.from_callable(dom, lambda x, y: np.ones_like(x))
        errs.append(abs(weighted_lp_norm(one, dom.distance_field(), 0.0, 2.0) - 1.0))
    assert errs[1] < errs[0] < 0.2


def test_lp_homogeneity(square16, rng):
    d = square16.distance_field()
    f = GridFunction(square16, rng.normal(size=square16.node_count))
    f2 = GridFunction(square16, 2.0 * f.values)
    a = weighted_lp_norm(f2, d, 1.0, 2.0)
    b = 2.0 * weighted_lp_norm(f, d, 1.0, 2.0)
    assert a == pytest.approx(b, rel=1e-13)


def test_lp_validation(square16):
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: x)
    with pytest.raises(ValueError):
        weighted_lp_norm(f, d, -1.0, 2.0)
    with pytest.raises(ValueError):
        weighted_lp_norm(f, d, 0.0, 0.5)


def test_gradient_linear_exact(square16):
    f = GridFunction.from_callable(square16, lambda x, y: x)
    g = gradient(f)
    assert np.allclose(g[:, 0], 1.0, atol=1e-12)
    assert np.allclose(g[:, 1], 0.0, atol=1e-12)


def test_gradient_constant_zero(square16):
    f = GridFunction.from_callable(square16, lambda x, y: np.full_like(x, 2.5))
    assert np.max(np.abs(gradient(f))) == 0.0


def test_gradient_quadratic_central_nodes(square16):
    f = GridFunction.from_callable(square16, lambda x, y: x * x)
    g = gradient(f)
    gidx = square16.flat_index
    for i in range(square16.node_count):
        ix, iy = square16.node_ix[i], square16.node_iy[i]
        if 0 < ix < square16.nx - 1 and gidx[iy, ix - 1] >= 0 and gidx[iy, ix + 1] >= 0:
            assert g[i, 0] == pytest.approx(2 * square16.xs[i], abs=1e-12)


def test_w1p_of_linear_matches_analytic(square64):
    d = square64.distance_field()
    f = GridFunction.from_callable(square64, lambda x, y: x)
    val = w1p_weighted_norm(f, d, 0.0, 0.0, 2.0)
    assert val == pytest.approx(1.0 / math.sqrt(3.0) + 1.0, abs=0.05)


def test_w1p_constant_reduces_to_lp(square16):
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: np.ones_like(x))
    assert w1p_weighted_norm(f, d, 0.0, 0.0, 2.0) == weighted_lp_norm(f, d, 0.0, 2.0)


@pytest.mark.parametrize("sval,beta", [(0.5, 1.0), (0.3, 0.6)])
def test_tilde_matches_brute_force(square12, sval, beta):
    d = square12.distance_field()
    f = GridFunction.from_callable(square12, lambda x, y: x * y)
    ours = tilde_seminorm(f, d, FracParams(s=sval, p=2.0, beta=beta, tau=0.5))
    oracle = brute_tilde(square12, d.values, f.values, sval, 2.0, beta, 0.5)
    assert ours == pytest.approx(oracle, rel=1e-12)


def test_delta_matches_brute_force(square12):
    d = square12.distance_field()
    f = GridFunction.from_callable(square12, lambda x, y: np.sin(np.pi * x) * y)
    ours = delta_seminorm(f, d, 0.5, 2.0, 1.0)
    oracle = brute_delta(square12, d.values, f.values, 0.5, 2.0, 1.0)
    assert ours == pytest.approx(oracle, rel=1e-12)


def test_seminorms_vanish_on_constants(square16):
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: np.full_like(x, 3.0))
    assert tilde_seminorm(f, d, FracParams(s=0.5, p=2.0, beta=1.0)) == 0.0
    assert delta_seminorm(f, d, 0.5, 2.0, 1.0) == 0.0


def test_seminorm_homogeneity(square16, rng):
    d = square16.distance_field()
    v = rng.normal(size=square16.node_count)
    params = FracParams(s=0.4, p=2.0, beta=0.8)
    a = tilde_seminorm(GridFunction(square16, 3.0 * v), d, params)
    b = 3.0 * tilde_seminorm(GridFunction(square16, v), d, params)
    assert a == pytest.approx(b, rel=1e-13)


def test_triangle_inequality_random_pairs(square16, rng):
    d = square16.distance_field()
    params = FracParams(s=0.5, p=2.0, beta=1.0)
    for _ in range(5):
        u = rng.normal(size=square16.node_count)
        v = rng.normal(size=square16.node_count)
        nu = tilde_seminorm(GridFunction(square16, u), d, params)
        nv = tilde_seminorm(GridFunction(square16, v), d, params)
        nuv = tilde_seminorm(GridFunction(square16, u + v), d, params)
        assert nuv <= nu + nv + 1e-10
        du = delta_seminorm(GridFunction(square16, u), d, 0.5, 2.0, 1.0)
        dv2 = delta_seminorm(GridFunction(square16, v), d, 0.5, 2.0, 1.0)
        duv = delta_seminorm(GridFunction(square16, u + v), d, 0.5, 2.0, 1.0)
        assert duv <= du + dv2 + 1e-10


def test_region_monotonicity_in_tau(square16):
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: np.sin(3 * x) + y)
    quarter = tilde_seminorm(f, d, FracParams(s=0.5, p=2.0, beta=1.0, tau=0.25))
    half = tilde_seminorm(f, d, FracParams(s=0.5, p=2.0, beta=1.0, tau=0.5))
    assert quarter <= half


def test_delta_dominates_restricted_delta_weight(square16):
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: x + 2 * y)
    restricted = tilde_seminorm_batch(
        square16, d, f.values[None], 0.5, 2.0, [1.0], 0.5, use_delta_weight=True
    )[0, 0]
    full = delta_seminorm(f, d, 0.5, 2.0, 1.0)
    assert restricted <= full


def test_restricted_weight_comparability(square16):
    # with weight min(d(x),d(y))^beta vs d(x)^beta on |x-y| < d(x)/2 the
    # summands differ by a factor in [2^-beta, 1]
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: x * x + y)
    beta = 1.3
    with_dx = tilde_seminorm_batch(square16, d, f.values[None], 0.5, 2.0, [beta], 0.5)
    with_delta = tilde_seminorm_batch(
        square16, d, f.values[None], 0.5, 2.0, [beta], 0.5, use_delta_weight=True
    )
    ratio = (with_delta[0, 0] / with_dx[0, 0]) ** 2.0
    assert 2.0**-beta - 1e-12 <= ratio <= 1.0 + 1e-12


def test_bbm_ratio_errors_on_constants(square16):
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: np.ones_like(x))
    with pytest.raises(ValueError):
        bbm_ratio(f, d, 0.9, 2.0)


def test_bbm_ratio_axis_symmetry(square32):
    d = square32.distance_field()
    fx = GridFunction.from_callable(square32, lambda x, y: x)
    fy = GridFunction.from_callable(square32, lambda x, y: y)
    assert bbm_ratio(fx, d, 0.9, 2.0) == pytest.approx(
        bbm_ratio(fy, d, 0.9, 2.0), rel=1e-12
    )


def test_norm_report_csv(tmp_path, square16):
    d = square16.distance_field()
    f = GridFunction.from_callable(square16, lambda x, y: x)
    rep = norm_report(f, d, FracParams(s=0.5, p=2.0, alpha=0.0, beta=1.0, tau=0.5))
    assert rep.domain == "unit_square" and rep.resolution == 16
    assert min(rep.lp, rep.w1p, rep.tilde_seminorm, rep.delta_seminorm) >= 0
    path = tmp_path / "reports.csv"
    write_norm_reports_csv([rep], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "domain,resolution,s,p,alpha,beta,tau,lp,w1p,tilde,delta"
    fields = lines[1].split(",")
    assert fields[0] == "unit_square"
    assert float(fields[7]) == rep.lp
