"""Per-foot stable-contact probability from a sliding window of foot IMU data.

Each of the six IMU axes gets a Gaussian-kernel density estimate over the
window; the probability mass of that density inside [-delta, +delta] is the
per-axis probability that the measurement is "close to zero". Axes are treated
as independent, so the stable-contact probability is their product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

N_AXES = 6
BANDWIDTH_FLOOR = 0.01


def kde_near_zero_prob(samples, bandwidth: float, halfwidth: float) -> float:
    """Mass of the Gaussian KDE of ``samples`` inside [-halfwidth, +halfwidth]."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least two samples")
    if bandwidth <= 0.0 or halfwidth <= 0.0:
        raise ValueError("bandwidth and halfwidth must be positive")
    mass = ndtr((halfwidth - x) / bandwidth) - ndtr((-halfwidth - x) / bandwidth)
    return float(min(1.0, max(0.0, mass.mean())))


def _spread(x: np.ndarray) -> np.ndarray:
    # min(std, IQR / 1.34): a single outlier must not widen every kernel
    sd = x.std(axis=0, ddof=1)
    q75, q25 = np.percentile(x, [75.0, 25.0], axis=0)
    iqr = (q75 - q25) / 1.34
    return np.where(iqr > 0.0, np.minimum(sd, iqr), sd)


def silverman_bandwidth(samples, floor: float = BANDWIDTH_FLOOR) -> float:
    """Silverman's rule of thumb, 0.9 min(sigma, IQR/1.34) N^-1/5, floored."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        return floor
    return max(floor, 0.9 * float(_spread(x)) * x.size ** (-0.2))


def axis_probs(data, halfwidths, floor: float = BANDWIDTH_FLOOR) -> np.ndarray:
    """Column-wise ``kde_near_zero_prob`` with Silverman bandwidths, for an (N, k) window."""
    x = np.asarray(data, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    h = np.maximum(floor, 0.9 * _spread(x) * n ** (-0.2))
    mass = ndtr((halfwidths - x) / h) - ndtr((-halfwidths - x) / h)
    return np.clip(mass.mean(axis=0), 0.0, 1.0)


@dataclass
class EstimatorConfig:
    window: int = 40
    sigma_accel: float = 0.35
    sigma_gyro: float = 0.05
    gravity: float = 9.81
    contact_threshold: float = 1.0
    bandwidth_floor: float = BANDWIDTH_FLOOR
    # below this many samples the KDE is too noisy to trust; report stable
    min_samples: int = 20

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must hold at least two samples")
        if not 2 <= self.min_samples <= self.window:
            raise ValueError("min_samples must lie in [2, window]")
        if min(self.sigma_accel, self.sigma_gyro) <= 0.0:
            raise ValueError("noise levels must be positive")

    @property
    def halfwidths(self) -> np.ndarray:
        # "close to zero" = within three noise standard deviations
        return np.array([3.0 * self.sigma_accel] * 3 + [3.0 * self.sigma_gyro] * 3)


@dataclass
class FootBelief:
    window: list = field(default_factory=list)
    in_contact: bool = False
    p_stable: float = 1.0
    axis_probs: np.ndarray = field(default_factory=lambda: np.ones(N_AXES))

    @property
    def p_slip(self) -> float:
        return 1.0 - self.p_stable


class SlipEstimator:
    """Holds one ``FootBelief`` per foot."""

    def __init__(self, config: EstimatorConfig | None = None, n_feet: int = 4):
        self.config = config or EstimatorConfig()
        self.beliefs = [FootBelief() for _ in range(n_feet)]

    def update(self, foot: int, imu, f_z: float) -> FootBelief:
        return update_belief(self.beliefs[foot], imu, f_z, self.config)

    @property
    def p_stable(self) -> np.ndarray:
        return np.array([b.p_stable for b in self.beliefs])

    @property
    def p_slip(self) -> np.ndarray:
        return 1.0 - self.p_stable


def update_belief(belief: FootBelief, imu, f_z: float, config: EstimatorConfig) -> FootBelief:
    """Push one IMU sample and refresh the foot's stable-contact probability (in place)."""
    belief.in_contact = f_z > config.contact_threshold
    if not belief.in_contact:
        belief.window.clear()
        belief.p_stable = 1.0
        belief.axis_probs = np.ones(N_AXES)
        return belief

    sample = np.concatenate([imu.accel, imu.gyro]).astype(float)
    sample[2] -= config.gravity
    belief.window.append(sample)
    if len(belief.window) > config.window:
        del belief.window[0]
    if len(belief.window) < config.min_samples:
        belief.p_stable = 1.0
        belief.axis_probs = np.ones(N_AXES)
        return belief

    probs = axis_probs(np.asarray(belief.window), config.halfwidths, config.bandwidth_floor)
    belief.axis_probs = probs
    belief.p_stable = math.prod(probs)
    return belief
