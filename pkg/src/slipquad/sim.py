"""Fixed-step centroidal simulator with per-foot stick/slip Coulomb contact.

The trunk is a single rigid body driven by gravity and the foot reaction
forces; legs are massless, so joint angles follow from the foot anchors by
inverse kinematics. A foot sticks while its commanded force is strictly inside
the static friction cone. Outside it the foot slides with a velocity
proportional to the force excess over kinetic friction (``slip_damping``
regularizes the massless leg) and transmits only kinetic friction.

Each foot carries a 6-axis IMU whose frame is world aligned. It reports the
contact-point specific force and the rotation rate of a spherical foot pad of
radius ``foot_radius`` that rolls along with any tangential foot motion.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .model import (
    N_LEGS,
    RobotParams,
    build_grasp_map,
    coriolis_matrix,
    gravity_wrench,
    inertia_matrix,
    leg_ik,
)
from .spatial import orthonormalize, rot_exp

STICK, SLIP, AIRBORNE = "stick", "slip", "airborne"
RESTICK_SPEED = 1e-4
UP = np.array([0.0, 0.0, 1.0])


class SimulationFault(RuntimeError):
    """Raised when the robot leaves the modelled regime (e.g. leg overextension)."""

    def __init__(self, message: str, state: "RobotState"):
        super().__init__(message)
        self.state = state


@dataclass
class ContactRecord:
    anchor: np.ndarray
    mode: str = STICK
    normal: np.ndarray = field(default_factory=lambda: UP.copy())
    mu_static: float = 1.0
    mu_kinetic: float = 0.9
    normal_force: float = 0.0
    slip_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.mu_kinetic > self.mu_static:
            raise ValueError("kinetic friction must not exceed static friction")
        self.anchor = np.asarray(self.anchor, dtype=float).reshape(3)
        self.normal = np.asarray(self.normal, dtype=float).reshape(3)
        self.normal = self.normal / np.linalg.norm(self.normal)


@dataclass
class ImuSample:
    accel: np.ndarray
    gyro: np.ndarray
    timestamp: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.accel, self.gyro])


@dataclass
class RobotState:
    p: np.ndarray
    R: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    q: np.ndarray
    contacts: list
    t: float = 0.0

    def foot_positions_body(self) -> np.ndarray:
        """Foot anchors expressed in the CoM frame."""
        return np.array([self.R.T @ (c.anchor - self.p) for c in self.contacts])

    def copy(self) -> "RobotState":
        return copy.deepcopy(self)


@dataclass
class SimConfig:
    mu_static: tuple = (1.4, 1.4, 1.4, 1.4)
    kinetic_ratio: float = 0.9
    slip_damping: float = 10.0
    foot_radius: float = 0.02
    sigma_accel: float = 0.35
    sigma_gyro: float = 0.05
    noise: bool = True
    ideal_contacts: bool = False


def dynamics_rhs(state: RobotState, F_c, params: RobotParams) -> np.ndarray:
    """Generalized acceleration from H V_dot + C V + g = F."""
    H = inertia_matrix(params, state.R)
    C = coriolis_matrix(params, state.R, state.omega)
    V = np.concatenate([state.v, state.omega])
    rhs = np.asarray(F_c, dtype=float).reshape(6) - C @ V - gravity_wrench(params)
    acc = np.empty(6)
    acc[:3] = rhs[:3] / params.mass
    acc[3:] = np.linalg.solve(H[3:, 3:], rhs[3:])
    return acc


def in_static_cone(f, normal, mu: float) -> bool:
    fn = float(np.dot(normal, f))
    ft = np.asarray(f) - fn * normal
    return mu * abs(fn) > float(np.linalg.norm(ft))


def cone_margin(f, normal, mu: float) -> float:
    fn = float(np.dot(normal, f))
    return mu * abs(fn) - float(np.linalg.norm(np.asarray(f) - fn * normal))


def contact_resolve(contacts, F_a, dt: float, slip_damping: float = 10.0, ideal: bool = False):
    """Turn commanded foot forces into transmitted forces and new contact records.

    Returns ``(applied, records)`` with ``applied`` shaped (4, 3).
    """
    F = np.asarray(F_a, dtype=float).reshape(N_LEGS, 3)
    applied = np.zeros_like(F)
    records = []
    for i, old in enumerate(contacts):
        rec = copy.copy(old)
        f = F[i]
        n = rec.normal
        fn = float(np.dot(n, f))
        if ideal:
            rec.mode, rec.slip_velocity = STICK, np.zeros(3)
            applied[i] = f
        elif fn <= 0.0:
            rec.mode, rec.slip_velocity = AIRBORNE, np.zeros(3)
        else:
            ft = f - fn * n
            ft_norm = float(np.linalg.norm(ft))
            excess = ft_norm - rec.mu_kinetic * fn
            if excess > 0.0 and ft_norm > 0.0:
                v_slip = -(excess / slip_damping) * ft / ft_norm
            else:
                v_slip = np.zeros(3)
            inside = rec.mu_static * fn > ft_norm
            if rec.mode == SLIP:
                stick = inside and float(np.linalg.norm(v_slip)) < RESTICK_SPEED
            else:
                stick = inside
            if stick:
                rec.mode, rec.slip_velocity = STICK, np.zeros(3)
                applied[i] = f
            else:
                rec.mode, rec.slip_velocity = SLIP, v_slip
                applied[i] = fn * n + rec.mu_kinetic * fn * ft / ft_norm
        rec.normal_force = max(0.0, float(np.dot(n, applied[i])))
        records.append(rec)
    return applied, records


class Simulator:
    def __init__(self, params: RobotParams, config: SimConfig | None = None, seed: int = 0):
        self.params = params
        self.config = config or SimConfig()
        self.rng = np.random.default_rng(seed)

    def initial_state(self, p, foot_anchors, R=None, v=None, omega=None) -> RobotState:
        cfg = self.config
        R = np.eye(3) if R is None else np.asarray(R, dtype=float)
        contacts = [
            ContactRecord(
                anchor=np.asarray(a, dtype=float),
                mu_static=float(cfg.mu_static[i]),
                mu_kinetic=cfg.kinetic_ratio * float(cfg.mu_static[i]),
            )
            for i, a in enumerate(np.asarray(foot_anchors, dtype=float).reshape(N_LEGS, 3))
        ]
        state = RobotState(
            p=np.asarray(p, dtype=float).copy(),
            R=R.copy(),
            v=np.zeros(3) if v is None else np.asarray(v, dtype=float).copy(),
            omega=np.zeros(3) if omega is None else np.asarray(omega, dtype=float).copy(),
            q=np.zeros((N_LEGS, 3)),
            contacts=contacts,
        )
        state.q = self._joint_angles(state)
        g = self.params.gravity
        for c in contacts:
            c.normal_force = self.params.mass * g / N_LEGS
        return state

    def _joint_angles(self, state: RobotState) -> np.ndarray:
        feet = state.foot_positions_body()
        try:
            return np.array([leg_ik(self.params, i, feet[i]) for i in range(N_LEGS)])
        except ValueError as exc:
            raise SimulationFault(f"t={state.t:.3f}s: {exc}", state) from exc

    def wrench_from_feet(self, state: RobotState, forces) -> np.ndarray:
        gm = build_grasp_map(state.R, state.foot_positions_body())
        return gm.G @ np.asarray(forces, dtype=float).reshape(3 * N_LEGS)

    def step(self, state: RobotState, F_a, dt: float):
        """Advance one step (semi-implicit Euler). Returns (new_state, imu_samples)."""
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        cfg = self.config
        applied, contacts = contact_resolve(
            state.contacts, F_a, dt, cfg.slip_damping, cfg.ideal_contacts
        )
        F_c = self.wrench_from_feet(state, applied)
        acc = dynamics_rhs(state, F_c, self.params)

        new = RobotState(
            p=state.p.copy(), R=state.R.copy(), v=state.v + acc[:3] * dt,
            omega=state.omega + acc[3:] * dt, q=state.q, contacts=contacts, t=state.t + dt,
        )
        new.p = state.p + new.v * dt
        new.R = orthonormalize(rot_exp(new.omega * dt) @ state.R)
        for c in contacts:
            c.anchor = c.anchor + c.slip_velocity * dt
        new.q = self._joint_angles(new)

        imu = [
            self.synthesize_imu(old.slip_velocity, c.slip_velocity, c.normal, dt, new.t)
            for old, c in zip(state.contacts, contacts)
        ]
        return new, imu

    def synthesize_imu(self, v_prev, v_now, normal, dt: float, t: float) -> ImuSample:
        cfg = self.config
        accel = (np.asarray(v_now) - np.asarray(v_prev)) / dt + np.array([0.0, 0.0, self.params.gravity])
        gyro = np.cross(normal, v_now) / cfg.foot_radius
        if cfg.noise:
            accel = accel + self.rng.normal(0.0, cfg.sigma_accel, 3)
            gyro = gyro + self.rng.normal(0.0, cfg.sigma_gyro, 3)
        return ImuSample(accel=accel, gyro=gyro, timestamp=t)
