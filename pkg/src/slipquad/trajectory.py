"""Reference generators driven by the scaled clock t_v.

Derivatives with respect to real time follow from the scaled-time ones by
d/dt = beta * d/dt_v (first derivatives) and beta**2 * d^2/dt_v^2 (second
derivatives). The beta_dot * d/dt_v term is dropped; beta changes by at most
alpha * dt per cycle and the feedback absorbs the remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spatial import rot_x


@dataclass
class TrajectorySample:
    p: np.ndarray
    dp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ddp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    domega: np.ndarray = field(default_factory=lambda: np.zeros(3))


def advance_clock(t_v: float, beta: float, dt: float) -> float:
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta={beta} outside (0, 1]")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return t_v + beta * dt


def p2p_sample(p_target, p_d, k_ds: float, beta: float, dt: float, R_d=None) -> TrajectorySample:
    """One Euler step of dp_d/dt_v = -k_ds (p_d - p_target) over dt_v = beta * dt.

    Returns the sample at the advanced point.
    """
    if k_ds <= 0.0:
        raise ValueError("k_ds must be positive")
    p_target = np.asarray(p_target, dtype=float)
    p_d = np.asarray(p_d, dtype=float)
    p_next = p_d - k_ds * (p_d - p_target) * beta * dt
    vel_v = -k_ds * (p_next - p_target)
    return TrajectorySample(
        p=p_next,
        dp=beta * vel_v,
        ddp=beta**2 * (-k_ds * vel_v),
        R=np.eye(3) if R_d is None else np.asarray(R_d, dtype=float),
    )


def ellipse_sample(
    t_v: float,
    center,
    a_x: float,
    a_z: float,
    f_p: float,
    theta_a: float,
    f_o: float,
    beta: float = 1.0,
) -> TrajectorySample:
    """Ellipse in the x-z plane plus a periodic roll about x."""
    if f_p < 0.0 or f_o < 0.0:
        raise ValueError("frequencies must be non-negative")
    w_p = 2.0 * np.pi * f_p
    w_o = 2.0 * np.pi * f_o
    s, c = np.sin(w_p * t_v), np.cos(w_p * t_v)
    p = np.asarray(center, dtype=float) + np.array([a_x * s, 0.0, a_z * (c - 1.0)])
    dp = np.array([a_x * w_p * c, 0.0, -a_z * w_p * s])
    ddp = np.array([-a_x * w_p**2 * s, 0.0, -a_z * w_p**2 * c])

    so, co = np.sin(w_o * t_v), np.cos(w_o * t_v)
    roll = theta_a * so
    droll = theta_a * w_o * co
    ddroll = -theta_a * w_o**2 * so
    return TrajectorySample(
        p=p,
        dp=beta * dp,
        ddp=beta**2 * ddp,
        R=rot_x(roll),
        omega=np.array([beta * droll, 0.0, 0.0]),
        domega=np.array([beta**2 * ddroll, 0.0, 0.0]),
    )


class PointToPoint:
    """First-order dynamical system converging to a constant target."""

    def __init__(self, p_start, p_target, k_ds: float = 1.0, R_d=None):
        self.p_d = np.asarray(p_start, dtype=float).copy()
        self.p_target = np.asarray(p_target, dtype=float).copy()
        self.k_ds = k_ds
        self.R_d = np.eye(3) if R_d is None else np.asarray(R_d, dtype=float)

    def sample(self, t_v: float, beta: float, dt: float) -> TrajectorySample:
        out = p2p_sample(self.p_target, self.p_d, self.k_ds, beta, dt, self.R_d)
        self.p_d = out.p.copy()
        return out

    def initial(self) -> TrajectorySample:
        vel = -self.k_ds * (self.p_d - self.p_target)
        return TrajectorySample(p=self.p_d.copy(), dp=vel, ddp=-self.k_ds * vel, R=self.R_d)


class Ellipse:
    def __init__(self, center, a_x=0.04, a_z=0.02, f_p=0.7, theta_a=0.1, f_o=0.2):
        self.center = np.asarray(center, dtype=float).copy()
        self.a_x, self.a_z, self.f_p = a_x, a_z, f_p
        self.theta_a, self.f_o = theta_a, f_o

    def at(self, t_v: float, beta: float = 1.0) -> TrajectorySample:
        return ellipse_sample(
            t_v, self.center, self.a_x, self.a_z, self.f_p, self.theta_a, self.f_o, beta
        )

    def sample(self, t_v: float, beta: float, dt: float) -> TrajectorySample:
        return self.at(t_v, beta)

    def initial(self) -> TrajectorySample:
        return self.at(0.0)
