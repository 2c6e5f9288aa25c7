import math

import numpy as np
import pytest

from fracnorm.norms import GridFunction, weighted_lp_norm, w1p_weighted_norm
from fracnorm.kfunctional import (
    compute_k_curve,
    default_lambda_grid,
    equivalence_report,
    interpolation_norm,
    k_constructive,
    k_objective,
    k_variational,
    write_equivalence_csv,
    write_k_curve_csv,
)


@pytest.fixture(scope="module")
def sq16(square16):
    return square16, square16.distance_field()


def test_zero_function(sq16):
    dom, d = sq16
    f = GridFunction(dom, np.zeros(dom.node_count))
    dec = k_variational(f, 0.5, 2.0, 0.0, d)
    assert dec.value == 0.0
    assert np.all(dec.g == 0.0) and np.all(dec.h == 0.0)


def test_splitting_is_feasible(sq16, rng):
    dom, d = sq16
    f = GridFunction(dom, rng.normal(size=dom.node_count))
    dec = k_variational(f, 0.3, 2.0, 0.5, d)
    assert np.allclose(dec.g + dec.h, f.values, atol=1e-12)
    val, _ = k_objective(dec.h, f, d, 0.3, 2.0, 0.5)
    assert dec.value == pytest.approx(val, rel=1e-12)


def test_value_bounded_by_trivial_splittings(sq16):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: np.sin(2 * x) * y)
    flp = weighted_lp_norm(f, d, 0.0, 2.0)
    fw = w1p_weighted_norm(f, d, 0.0, 2.0, 2.0)
    for lam in (0.05, 0.3, 1.0, 3.0):
        dec = k_variational(f, lam, 2.0, 0.0, d)
        assert dec.value <= min(flp, lam * fw) + 1e-12


def test_matches_one_parameter_family_oracle(sq16):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: x)
    lam = 0.1
    family = [
        k_objective(c * f.values, f, d, lam, 2.0, 0.0)[0]
        for c in np.arange(0.0, 1.0 + 1e-12, 0.01)
    ]
    dec = k_variational(f, lam, 2.0, 0.0, d)
    assert dec.value <= min(family) * 1.01


def test_invalid_inputs(sq16):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: x)
    with pytest.raises(ValueError):
        k_variational(f, 0.5, 0.5, 0.0, d)
    with pytest.raises(ValueError):
        k_variational(f, -1.0, 2.0, 0.0, d)


def test_general_p_subgradient_path(sq16):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: x)
    flp = weighted_lp_norm(f, d, 0.0, 1.5)
    fw = w1p_weighted_norm(f, d, 0.0, 1.5, 1.5)
    dec = k_variational(f, 0.4, 1.5, 0.0, d, max_iter=2000)
    assert dec.value <= min(flp, 0.4 * fw) + 1e-12
    assert np.allclose(dec.g + dec.h, f.values)


def test_constructive_trivial_above_one(sq16):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: x)
    dec = k_constructive(f, 1.5, 2.0, 0.0, d)
    assert dec.method == "trivial-tail"
    assert np.all(dec.h == 0.0)
    assert dec.value == pytest.approx(weighted_lp_norm(f, d, 0.0, 2.0), rel=1e-12)


def test_constructive_reproduces_constants(sq16):
    dom, d = sq16
    c = 2.0
    f = GridFunction(dom, np.full(dom.node_count, c))
    dec = k_constructive(f, 0.5, 2.0, 0.0, d)
    assert np.max(np.abs(dec.g)) <= 1e-10
    assert dec.value == pytest.approx(
        0.5 * weighted_lp_norm(f, d, 0.0, 2.0), rel=1e-9
    )


def test_constructive_dominates_variational(square32):
    dom = square32
    d = dom.distance_field()
    f = GridFunction.from_callable(dom, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    for lam in (0.5, 0.25):
        dv = k_variational(f, lam, 2.0, 0.0, d)
        dc = k_constructive(f, lam, 2.0, 0.0, d)
        assert dc.value >= dv.value * (1 - 1e-9)
        assert dc.value <= 10.0 * dv.value


def test_constructive_coupling_knob(square32):
    dom = square32
    d = dom.distance_field()
    f = GridFunction.from_callable(dom, lambda x, y: x)
    a = k_constructive(f, 0.5, 2.0, 0.0, d, coupling=1.0)
    b = k_constructive(f, 0.5, 2.0, 0.0, d, coupling=0.5)
    assert a.value != b.value  # different refinement scales


def test_curve_structure(sq16):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: x * y)
    lams = default_lambda_grid(dom, 12)
    curve = compute_k_curve(f, lams, 2.0, 0.0, d)
    K = curve.values
    assert np.all(K[1:] >= K[:-1] * (1 - 0.01))
    for i in range(1, len(lams) - 1):
        t = (lams[i] - lams[i - 1]) / (lams[i + 1] - lams[i - 1])
        chord = (1 - t) * K[i - 1] + t * K[i + 1]
        assert K[i] >= chord * (1 - 0.01)


def test_k_subadditive(sq16, rng):
    dom, d = sq16
    u = GridFunction(dom, rng.normal(size=dom.node_count))
    v = GridFunction(dom, rng.normal(size=dom.node_count))
    lam = 0.3
    ku = k_variational(u, lam, 2.0, 0.0, d).value
    kv = k_variational(v, lam, 2.0, 0.0, d).value
    kuv = k_variational(GridFunction(dom, u.values + v.values), lam, 2.0, 0.0, d).value
    assert kuv <= ku + kv + 0.01 * (ku + kv)


def test_interpolation_norm_basics(sq16):
    dom, d = sq16
    zero = GridFunction(dom, np.zeros(dom.node_count))
    assert interpolation_norm(zero, 0.5, 2.0, 0.0, d).value == 0.0
    f = GridFunction.from_callable(dom, lambda x, y: x)
    res = interpolation_norm(f, 0.5, 2.0, 0.0, d)
    assert res.value > 0 and not res.head_omitted
    assert res.tail > 0 and res.head >= 0
    f2 = GridFunction(dom, 2.0 * f.values)
    res2 = interpolation_norm(f2, 0.5, 2.0, 0.0, d)
    assert res2.value == pytest.approx(2.0 * res.value, rel=0.01)
    with pytest.raises(ValueError):
        interpolation_norm(f, 1.5, 2.0, 0.0, d)


def test_interpolation_norm_grid_refinement_stable(sq16):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    v1 = interpolation_norm(f, 0.5, 2.0, 0.0, d, default_lambda_grid(dom, 16)).value
    v2 = interpolation_norm(f, 0.5, 2.0, 0.0, d, default_lambda_grid(dom, 32)).value
    assert max(v1, v2) / min(v1, v2) <= 1.05


def test_equivalence_report_rows(sq16, tmp_path):
    dom, d = sq16
    funcs = {
        "linear": GridFunction.from_callable(dom, lambda x, y: x),
        "const": GridFunction.from_callable(dom, lambda x, y: np.ones_like(x)),
    }
    rows = equivalence_report(dom, d, funcs, 0.5, 2.0, 0.0,
                              lambdas=default_lambda_grid(dom, 8))
    assert [r["function_id"] for r in rows] == ["linear", "const"]
    const_row = rows[1]
    # constant: seminorm parts vanish, full norms reduce to the L^p part
    assert const_row["tilde_norm"] == pytest.approx(const_row["delta_norm"], rel=1e-12)
    assert const_row["ratio_td"] == pytest.approx(1.0, rel=1e-12)
    for r in rows:
        assert r["interp_norm"] > 0 and r["tilde_norm"] > 0
    path = tmp_path / "eq.csv"
    write_equivalence_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("function_id,interp_norm")
    assert len(lines) == 3


def test_k_curve_csv(sq16, tmp_path):
    dom, d = sq16
    f = GridFunction.from_callable(dom, lambda x, y: x)
    curve = compute_k_curve(f, default_lambda_grid(dom, 6), 2.0, 0.0, d)
    path = tmp_path / "curve.csv"
    write_k_curve_csv(curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,K,method,iterations,objective_gap"
    assert len(lines) == 7
    assert lines[1].split(",")[2] == "variational"
