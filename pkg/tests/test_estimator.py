import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import gaussian_kde

from slipquad.estimator import (
    BANDWIDTH_FLOOR,
    EstimatorConfig,
    FootBelief,
    SlipEstimator,
    axis_probs,
    kde_near_zero_prob,
    silverman_bandwidth,
    update_belief,
)
from slipquad.sim import ImuSample

samples = arrays(np.float64, st.integers(2, 60), elements=st.floats(-5.0, 5.0))


def imu(accel=(0.0, 0.0, 9.81), gyro=(0.0, 0.0, 0.0)):
    return ImuSample(np.array(accel, dtype=float), np.array(gyro, dtype=float), 0.0)


@given(samples, st.floats(0.01, 2.0), st.floats(0.05, 3.0))
def test_kde_mass_matches_scipy(x, h, delta):
    # the oracle needs a non-degenerate sample covariance
    assume(x.std(ddof=1) > 1e-3)
    kde = gaussian_kde(x, bw_method=h / x.std(ddof=1))
    expected = kde.integrate_box_1d(-delta, delta)
    assert kde_near_zero_prob(x, h, delta) == pytest.approx(expected, abs=1e-9)


@given(samples, st.floats(0.01, 2.0), st.floats(0.05, 3.0))
def test_kde_mass_is_probability(x, h, delta):
    p = kde_near_zero_prob(x, h, delta)
    assert 0.0 <= p <= 1.0


def test_kde_mass_limits():
    x = np.zeros(10)
    assert kde_near_zero_prob(x, 1e-3, 1.0) == pytest.approx(1.0)
    assert kde_near_zero_prob(x + 100.0, 1.0, 1.0) == pytest.approx(0.0)
    # one centred kernel of width h: mass within +-h is erf(1/sqrt 2)
    assert kde_near_zero_prob([0.0, 0.0], 0.5, 0.5) == pytest.approx(math.erf(1 / math.sqrt(2)))


def test_kde_rejects_bad_arguments():
    with pytest.raises(ValueError):
        kde_near_zero_prob([1.0], 0.1, 0.1)
    with pytest.raises(ValueError):
        kde_near_zero_prob([1.0, 2.0], 0.0, 0.1)


def test_silverman_rule_on_normal_data(rng):
    x = rng.normal(0.0, 2.0, 500)
    iqr = np.subtract(*np.percentile(x, [75, 25])) / 1.34
    expected = 0.9 * min(x.std(ddof=1), iqr) * 500 ** -0.2
    assert silverman_bandwidth(x) == pytest.approx(expected)


def test_silverman_robust_to_outlier(rng):
    x = rng.normal(0.0, 0.1, 40)
    spiked = x.copy()
    spiked[0] = 50.0
    assert silverman_bandwidth(spiked) < 2.0 * silverman_bandwidth(x)


def test_silverman_floor():
    assert silverman_bandwidth(np.zeros(20)) == BANDWIDTH_FLOOR
    assert silverman_bandwidth([1.0]) == BANDWIDTH_FLOOR


@given(arrays(np.float64, (40, 6), elements=st.floats(-3.0, 3.0)))
def test_axis_probs_equals_per_axis_kde(data):
    cfg = EstimatorConfig()
    probs = axis_probs(data, cfg.halfwidths)
    for k in range(6):
        h = silverman_bandwidth(data[:, k])
        assert probs[k] == pytest.approx(kde_near_zero_prob(data[:, k], h, cfg.halfwidths[k]), abs=1e-12)


def test_stationary_foot_is_stable(rng):
    est = SlipEstimator(EstimatorConfig())
    for _ in range(80):
        sample = imu(rng.normal([0, 0, 9.81], 0.35), rng.normal(0.0, 0.05, 3))
        est.update(0, sample, 30.0)
    assert est.p_stable[0] > 0.8


def test_sliding_foot_is_unstable(rng):
    est = SlipEstimator(EstimatorConfig())
    for _ in range(40):
        est.update(0, imu(rng.normal([0, 0, 9.81], 0.35), rng.normal(0.0, 0.05, 3)), 30.0)
    for _ in range(40):
        est.update(0, imu(rng.normal([0, 0, 9.81], 0.35), rng.normal([5.0, 0.0, 0.0], 0.05)), 30.0)
    assert est.p_slip[0] > 0.95


def test_fused_probability_is_axis_product(rng):
    cfg = EstimatorConfig()
    b = FootBelief()
    for _ in range(40):
        update_belief(b, imu(rng.normal([0, 0, 9.81], 1.0), rng.normal(0.0, 0.2, 3)), 30.0, cfg)
    assert b.p_stable == math.prod(b.axis_probs)
    assert 0.0 <= b.p_stable <= 1.0


def test_warm_up_reports_stable():
    cfg = EstimatorConfig(min_samples=5)
    b = FootBelief()
    slipping = imu(gyro=(10.0, 0.0, 0.0))
    for k in range(4):
        update_belief(b, slipping, 30.0, cfg)
        assert b.p_stable == 1.0
    update_belief(b, slipping, 30.0, cfg)
    assert b.p_stable < 0.01


def test_airborne_clears_window():
    cfg = EstimatorConfig()
    b = FootBelief()
    for _ in range(30):
        update_belief(b, imu(gyro=(10.0, 0.0, 0.0)), 30.0, cfg)
    assert b.p_stable < 0.01
    update_belief(b, imu(gyro=(10.0, 0.0, 0.0)), 0.5, cfg)
    assert b.p_stable == 1.0
    assert not b.in_contact
    assert b.window == []


def test_window_is_bounded():
    cfg = EstimatorConfig(window=10, min_samples=5)
    b = FootBelief()
    for _ in range(25):
        update_belief(b, imu(), 30.0, cfg)
    assert len(b.window) == 10


@pytest.mark.parametrize(
    "kw", [{"window": 1}, {"min_samples": 1}, {"window": 10, "min_samples": 11}, {"sigma_accel": 0.0}]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EstimatorConfig(**kw)
