"""Task-space tracking controller with slip-driven adaptation.

Force distribution uses the right weighted pseudo-inverse of the grasp map,
F_a = W^-1 G^T (G W^-1 G^T)^-1 F_c. The tangential weights of a foot grow at
a rate proportional to its slip probability, steering effort away from it.
When every foot has adapted, the reference clock slows down by
beta = w0 / min_i w_i,x.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .model import (
    N_LEGS,
    GraspMap,
    RobotParams,
    build_grasp_map,
    coriolis_matrix,
    gravity_wrench,
    inertia_matrix,
    joint_torques,
)
from .spatial import rot_log, skew
from .trajectory import TrajectorySample, advance_clock

log = logging.getLogger(__name__)

MAX_CONDITION = 1e12


class NearSingularStanceError(RuntimeError):
    pass


@dataclass
class ControllerGains:
    kp: float = 3000.0
    ko: float = 150.0
    Kv: np.ndarray = field(default_factory=lambda: np.diag([550.0] * 3 + [55.0] * 3))
    w0: float = 35.0
    alpha: float = 150.0
    # slip probabilities at or below this level count as no slip
    slip_deadzone: float = 0.25
    w_max: float | None = None

    def __post_init__(self):
        self.Kv = np.asarray(self.Kv, dtype=float)
        if self.Kv.ndim == 1:
            self.Kv = np.diag(self.Kv)
        if min(self.kp, self.ko, self.w0, self.alpha) <= 0.0:
            raise ValueError("kp, ko, w0 and alpha must be positive")
        if not np.allclose(self.Kv, self.Kv.T) or np.min(np.linalg.eigvalsh(self.Kv)) <= 0.0:
            raise ValueError("Kv must be symmetric positive definite")
        if not 0.0 <= self.slip_deadzone < 1.0:
            raise ValueError("slip_deadzone must lie in [0, 1)")


@dataclass
class WeightState:
    """Diagonal of W ordered (w_11, w_12, w_13, ..., w_43) plus the scaled clock."""

    w: np.ndarray
    t_v: float = 0.0
    beta: float = 1.0

    @classmethod
    def initial(cls, w0: float) -> "WeightState":
        return cls(w=np.full(3 * N_LEGS, float(w0)), t_v=0.0, beta=1.0)

    @property
    def tangential(self) -> np.ndarray:
        return self.w[0::3].copy()


@dataclass
class PoseError:
    e_p: np.ndarray
    e_o: np.ndarray
    e_v: np.ndarray


def _as6(F) -> np.ndarray:
    if hasattr(F, "as_vector"):
        F = F.as_vector()
    return np.asarray(F, dtype=float).reshape(6)


def reference_angular_velocity(R_c, ref: TrajectorySample) -> np.ndarray:
    return R_c @ ref.R.T @ ref.omega


def pose_errors(state, ref: TrajectorySample) -> PoseError:
    R_rel = state.R @ ref.R.T
    e_p = state.p - ref.p
    e_o = rot_log(R_rel)
    e_v = np.concatenate([state.v - ref.dp, state.omega - R_rel @ ref.omega])
    return PoseError(e_p, e_o, e_v)


def control_wrench(err: PoseError, state, ref: TrajectorySample, gains: ControllerGains,
                   params: RobotParams) -> np.ndarray:
    """Commanded CoM wrench [force; torque] with gravity compensation."""
    R_rel = state.R @ ref.R.T
    w_r = R_rel @ ref.omega
    # d/dt(R_c R_d^T w_d) = S(w_c) R_c R_d^T w_d + R_c R_d^T dw_d
    dw_r = skew(state.omega) @ w_r + R_rel @ ref.domega
    H = inertia_matrix(params, state.R)
    C = coriolis_matrix(params, state.R, state.omega)
    ff = H @ np.concatenate([ref.ddp, dw_r]) + C @ np.concatenate([ref.dp, w_r])
    fb = np.concatenate([gains.kp * err.e_p, gains.ko * err.e_o]) + gains.Kv @ err.e_v
    return ff - fb + gravity_wrench(params)


def distribute_forces(G, F_c, w) -> np.ndarray:
    """Minimum F^T W F solution of G F = F_c (weighted right pseudo-inverse)."""
    G = G.G if isinstance(G, GraspMap) else np.asarray(G, dtype=float)
    w = w.w if isinstance(w, WeightState) else np.asarray(w, dtype=float)
    Winv = 1.0 / w
    A = (G * Winv) @ G.T
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NearSingularStanceError(f"G W^-1 G^T condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")
    try:
        factor = cho_factor(A)
    except LinAlgError:
        factor = cho_factor(A + 1e-12 * np.eye(A.shape[0]))
    lam = cho_solve(factor, _as6(F_c))
    return Winv * (G.T @ lam)


def slip_evidence(p_slip, deadzone: float) -> np.ndarray:
    """Rescale slip probabilities so values up to ``deadzone`` map to zero and 1 stays 1."""
    p = np.asarray(p_slip, dtype=float)
    return np.clip((p - deadzone) / (1.0 - deadzone), 0.0, 1.0)


def adapt_weights(ws: WeightState, slip_probs, gains: ControllerGains, dt: float) -> WeightState:
    """Forward-Euler step of dw_i,x/dt = dw_i,y/dt = alpha * P_slip,i."""
    p = np.asarray(slip_probs, dtype=float).reshape(N_LEGS)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("slip probabilities must lie in [0, 1]")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    w = ws.w.copy()
    rate = gains.alpha * p * dt
    w[0::3] += rate
    w[1::3] += rate
    if gains.w_max is not None and np.any(w > gains.w_max):
        log.warning("tangential weight cap %.1f reached", gains.w_max)
        np.minimum(w, gains.w_max, out=w)
        w[2::3] = ws.w[2::3]
    return replace(ws, w=w)


def time_scale(ws: WeightState, gains: ControllerGains) -> float:
    return float(gains.w0 / np.min(ws.w[0::3]))


def lyapunov(err: PoseError, gains: ControllerGains, params: RobotParams, R_c) -> float:
    H = inertia_matrix(params, R_c)
    return float(
        0.5 * gains.kp * err.e_p @ err.e_p
        + 0.5 * gains.ko * err.e_o @ err.e_o
        + 0.5 * err.e_v @ H @ err.e_v
    )


@dataclass
class CycleResult:
    torques: np.ndarray
    forces: np.ndarray
    wrench: np.ndarray
    weights: WeightState
    ref: TrajectorySample
    error: PoseError
    lyapunov: float
    p_stable: np.ndarray


class AdaptiveController:
    """Sequential control loop: estimate, adapt, scale time, track, distribute."""

    def __init__(self, params: RobotParams, gains: ControllerGains, trajectory, estimator=None,
                 layer1: bool = True, layer2: bool = True):
        self.params = params
        self.gains = gains
        self.trajectory = trajectory
        self.estimator = estimator
        self.layer1 = layer1
        self.layer2 = layer2
        self.weights = WeightState.initial(gains.w0)

    def estimate(self, state, imu) -> np.ndarray:
        if self.estimator is None or imu is None:
            return np.ones(N_LEGS)
        for i in range(N_LEGS):
            self.estimator.update(i, imu[i], state.contacts[i].normal_force)
        return self.estimator.p_stable

    def control_cycle(self, state, imu=None, dt: float = 0.002, slip_override=None) -> CycleResult:
        p_stable = self.estimate(state, imu)
        p_slip = 1.0 - p_stable if slip_override is None else np.asarray(slip_override, dtype=float)

        ws = self.weights
        if self.layer1:
            ws = adapt_weights(ws, slip_evidence(p_slip, self.gains.slip_deadzone), self.gains, dt)
        beta = time_scale(ws, self.gains) if self.layer2 else 1.0
        t_v = advance_clock(ws.t_v, beta, dt)
        ws = replace(ws, beta=beta, t_v=t_v)
        self.weights = ws

        ref = self.trajectory.sample(t_v, beta, dt)
        err = pose_errors(state, ref)
        F_c = control_wrench(err, state, ref, self.gains, self.params)
        gm = build_grasp_map(state.R, state.foot_positions_body())
        F_a = distribute_forces(gm, F_c, ws)
        forces = F_a.reshape(N_LEGS, 3)
        torques = np.array(
            [joint_torques(state.R, self.params, i, state.q[i], forces[i]) for i in range(N_LEGS)]
        )
        return CycleResult(
            torques=torques,
            forces=forces,
            wrench=F_c,
            weights=ws,
            ref=ref,
            error=err,
            lyapunov=lyapunov(err, self.gains, self.params, state.R),
            p_stable=np.asarray(p_stable, dtype=float),
        )
