import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorcp.confidence import (
    CIResult,
    GridSpec,
    GridTooSmall,
    argmax_cdf,
    argmax_quantile,
    brownian_argmax_draws,
    brownian_argmax_quantiles,
    ci_for_changepoint,
    estimate_jump,
)
from tensorcp.detector import DetectorConfig, detect
from tensorcp.mosum import piecewise_mean
from tensorcp.simgen import gen_dense_order1
from tensorcp.tensor import TensorSeq

# Quantiles of the closed-form argmax law, evaluated with mpmath.
Q975 = 11.033292445409416
Q95 = 7.6872755462913266

CALIBRATED = DetectorConfig.preset("calibrated")
UNIT = (-Q975, Q975)


@pytest.fixture(scope="module")
def draws():
    values, edges = brownian_argmax_draws(200_000, seed=11, workers=4)
    return values, edges


def test_closed_form_quantiles_golden():
    assert argmax_quantile(0.975) == pytest.approx(Q975, abs=1e-8)
    assert argmax_quantile(0.95) == pytest.approx(Q95, abs=1e-8)
    assert argmax_quantile(0.025) == pytest.approx(-Q975, abs=1e-8)


@given(st.floats(0.01, 100))
def test_closed_form_cdf_symmetric_and_monotone(x):
    assert argmax_cdf(x) + argmax_cdf(-x) == pytest.approx(1.0, abs=1e-12)
    assert argmax_cdf(x) <= argmax_cdf(x * 1.1) + 1e-15
    assert argmax_cdf(0.0) == pytest.approx(0.5)


def test_median_zero(draws):
    values, _ = draws
    assert abs(np.median(values)) <= 0.05
    # the grid puts an atom at 0 (both sides peak below the origin)
    assert abs(np.mean(values > 0) - np.mean(values < 0)) <= 0.01


def test_monte_carlo_matches_closed_form(draws):
    values, edges = draws
    assert edges / values.size <= 1e-3
    for prob, exact in ((0.95, Q975), (0.90, Q95)):
        q = np.quantile(np.abs(values), prob)
        assert q == pytest.approx(exact, rel=0.03)


def test_path_doubling_stability(draws):
    values, _ = draws
    half = np.quantile(np.abs(values[:100_000]), 0.95)
    full = np.quantile(np.abs(values), 0.95)
    assert abs(full - half) / full < 0.01


def test_draws_are_nested_and_worker_independent():
    small, _ = brownian_argmax_draws(6_000, seed=5)
    large, _ = brownian_argmax_draws(12_000, seed=5, workers=3)
    assert np.array_equal(small, large[:6_000])


@pytest.mark.parametrize("scale", [0.125, 1.0, 4.0])
def test_quantiles_scale_linearly(scale):
    lo, hi = brownian_argmax_quantiles(scale, paths=10_000, seed=2)
    ulo, uhi = brownian_argmax_quantiles(1.0, paths=10_000, seed=2)
    assert (lo, hi) == pytest.approx((scale * ulo, scale * uhi), rel=1e-12)
    assert lo == -hi


def test_quantile_argument_checks():
    with pytest.raises(ValueError):
        brownian_argmax_quantiles(paths=5_000)
    with pytest.raises(ValueError):
        brownian_argmax_quantiles(level=1.5, paths=10_000)
    with pytest.raises(ValueError):
        GridSpec(step=1.0, radius=0.5)


def test_grid_too_small():
    with pytest.raises(GridTooSmall) as err:
        brownian_argmax_quantiles(paths=10_000, grid=GridSpec(0.05, 2.0), widen=False)
    assert err.value.suggested_radius == 4.0
    # widening recovers from a small radius
    lo, hi = brownian_argmax_quantiles(paths=10_000, grid=GridSpec(0.05, 8.0))
    assert hi == pytest.approx(Q975, rel=0.1)


@pytest.fixture(scope="module")
def dense():
    seq, spec = gen_dense_order1(50, 0.4, seed=21)
    return seq, spec, detect(seq, CALIBRATED)


def test_jump_estimate_accuracy(dense):
    seq, spec, det = dense
    assert det.k_hat == 8
    est = estimate_jump(seq, det, 3)
    assert est.support.size >= 45
    assert np.median(np.abs(est.jump)) == pytest.approx(0.4, abs=0.1)
    assert np.all(np.abs(est.jump) > math.sqrt(CALIBRATED.screening_params(seq.n).threshold))


def test_jump_accuracy_across_seeds():
    hits = 0
    for seed in range(20):
        seq, _ = gen_dense_order1(50, 0.4, seed=100 + seed)
        det = detect(seq, CALIBRATED)
        k = 1 + int(np.argmin(np.abs(np.array(det.locations) - 1000)))
        est = estimate_jump(seq, det, k)
        hits += abs(np.median(np.abs(est.jump)) - 0.4) <= 0.1
    assert hits >= 18


def test_a_k_is_squared_standardized_jump(dense):
    seq, _, det = dense
    est = estimate_jump(seq, det, 2)
    left, z, right = det.locations[0], det.locations[1], det.locations[2]
    before, after = seq.data[left:z], seq.data[z:right]
    resid = np.vstack([before - before.mean(0), after - after.mean(0)])[:, est.support]
    sd = np.sqrt((resid**2).sum(0) / (resid.shape[0] - 2))
    assert est.a_k == pytest.approx(float(np.sum((est.jump / sd) ** 2)), rel=1e-12)
    # independent coordinates: zeta^2 close to a_k
    assert est.zeta_k**2 / est.a_k == pytest.approx(1.0, abs=0.2)


def test_ci_contains_center_and_is_ordered(dense):
    seq, spec, det = dense
    for k in range(1, det.k_hat + 1):
        ci = ci_for_changepoint(seq, det, k, quantiles=UNIT)
        assert ci.available and ci.lower < ci.center < ci.upper
        q = ci.scale * Q975
        assert (ci.lower, ci.upper) == (ci.center - math.floor(q) - 1, ci.center + math.ceil(q) + 1)


def test_ci_with_simulated_quantiles(dense):
    seq, _, det = dense
    ci = ci_for_changepoint(seq, det, 1, paths=10_000, seed=3)
    assert ci.q_hi == pytest.approx(ci.scale * Q975, rel=0.1)
    assert ci.normalized == (ci.lower / det.alpha, ci.upper / det.alpha)
    assert set(ci.to_dict()) >= {"lower", "upper", "center", "level", "scale", "flags"}


def test_doubled_noise_widens_interval():
    widths = []
    for sigma in (1.0, 2.0):
        seq, spec = gen_dense_order1(50, 0.8, seed=4, sigma=sigma)
        det = detect(seq, CALIBRATED)
        k = 1 + int(np.argmin(np.abs(np.array(det.locations) - 800)))
        assert abs(det.locations[k - 1] - 800) <= 21
        ci = ci_for_changepoint(seq, det, k, quantiles=UNIT)
        widths.append((ci.upper - ci.lower, ci.scale))
    assert widths[1][0] > widths[0][0]
    assert widths[1][1] == pytest.approx(4 * widths[0][1], rel=0.35)


def test_noiseless_input_flags_floor():
    seq = TensorSeq(piecewise_mean([np.zeros(5), np.full(5, 20.0)], [600], 1800))
    det = detect(seq, CALIBRATED)
    assert det.locations == [601]
    # centred exactly on the change, every residual vanishes
    det = replace(det, locations=[600])
    ci = ci_for_changepoint(seq, det, 1, quantiles=UNIT)
    assert "residual variance floored" in ci.flags
    assert ci.available


def test_empty_support_is_unavailable(dense):
    seq, _, det = dense
    ci = ci_for_changepoint(seq, det, 1, hard_threshold=100.0, quantiles=UNIT)
    assert not ci.available and ci.lower is None
    assert "empty support" in ci.flags and "ci unavailable" in ci.flags
    assert not ci.covers(ci.center)


def test_bad_change_index(dense):
    seq, _, det = dense
    with pytest.raises(IndexError):
        estimate_jump(seq, det, 9)
    with pytest.raises(ValueError):
        ci_for_changepoint(seq, det, 1, level=0.0)


def test_ciresult_covers():
    ci = CIResult(k=1, level=0.95, center=100, lower=98, upper=103)
    assert ci.covers(98) and ci.covers(103) and not ci.covers(104)
