import numpy as np
import pytest

from fracnorm import kernels


def _setup(dom, rng, nf=3):
    d = dom.distance_field()
    vals = np.vstack(
        [dom.xs, np.sin(dom.xs + 2 * dom.ys), rng.normal(size=dom.node_count)]
    )[:nf]
    return d.values, vals


def test_windowed_tilde_matches_reference_bitwise(square16, rng):
    dv, vals = _setup(square16, rng)
    betas = [0.5, 1.0]
    win = kernels.tilde_sums(square16, dv, vals, 0.5, 2.0, betas, 0.5)
    ref = kernels.tilde_sums_reference(square16, dv, vals, 0.5, 2.0, betas, 0.5)
    if kernels.USING_NUMBA:
        assert np.array_equal(win, ref)
    else:
        assert np.allclose(win, ref, rtol=1e-12)


def test_windowed_tilde_matches_reference_delta_weight(square16, rng):
    dv, vals = _setup(square16, rng)
    win = kernels.tilde_sums(square16, dv, vals, 0.3, 2.0, [0.6], 0.25, True)
    ref = kernels.tilde_sums_reference(square16, dv, vals, 0.3, 2.0, [0.6], 0.25, True)
    assert np.allclose(win, ref, rtol=1e-12)


@pytest.mark.skipif(not kernels.USING_NUMBA, reason="numba backend inactive")
def test_numpy_fallback_agrees_with_numba(square16, rng):
    dv, vals = _setup(square16, rng)
    betas = np.array([0.5, 1.0])
    qexp = (2.0 + 0.5 * 2.0) / 2.0
    xs = np.ascontiguousarray(square16.xs)
    ys = np.ascontiguousarray(square16.ys)

    til_nb = kernels.tilde_sums(square16, dv, vals, 0.5, 2.0, betas, 0.5)
    til_np = kernels._tilde_numpy(xs, ys, dv, vals, 2.0, qexp, betas, 0.5, False)
    assert np.allclose(til_nb, til_np, rtol=1e-12)

    dlt_nb = kernels.delta_sums(square16, dv, vals, 0.5, 2.0, betas)
    dlt_np = kernels._delta_numpy(xs, ys, dv, vals, 2.0, qexp, betas)
    assert np.allclose(dlt_nb, dlt_np, rtol=1e-12)

    off_nb = kernels.offregion_weight_sums(square16, dv, 0.5, 2.0, betas)
    off_np = kernels._offregion_numpy(xs, ys, dv, qexp, betas)
    assert np.allclose(off_nb, off_np, rtol=1e-12)

    rng_nb = kernels.restricted_weight_ratio_range(square16, dv, 0.5)
    rng_np = kernels._ratio_range_numpy(xs, ys, dv, 0.5)
    assert rng_nb == pytest.approx(rng_np, rel=1e-14)


def test_general_p_path(square12, rng):
    dv, vals = _setup(square12, rng, nf=1)
    out2 = kernels.tilde_sums(square12, dv, vals, 0.5, 1.5, [1.0], 0.5)
    # independent slow check for p != 2
    import math

    total = 0.0
    dom = square12
    n = dom.node_count
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            r = math.hypot(dom.xs[i] - dom.xs[j], dom.ys[i] - dom.ys[j])
            if r < 0.5 * dv[i]:
                total += abs(vals[0, i] - vals[0, j]) ** 1.5 / r ** (2 + 0.5 * 1.5) * dv[i]
    assert out2[0, 0] == pytest.approx(total, rel=1e-12)


def test_ratio_range_bounds(square32):
    dv = square32.distance_field().values
    lo, hi = kernels.restricted_weight_ratio_range(square32, dv, 0.5)
    assert 0.5 - 1e-12 <= lo <= hi <= 1.0


def test_offregion_sums_shape_and_positivity(square16):
    dv = square16.distance_field().values
    out = kernels.offregion_weight_sums(square16, dv, 0.5, 2.0, [1.0, 2.0])
    assert out.shape == (2, square16.node_count)
    assert np.all(out >= 0)
