"""Quadruped kinematics: 3-DOF legs, leg Jacobians, grasp matrix, joint torques.

Legs are ordered front-left, front-right, rear-right, rear-left (indices 0..3).
Each leg is hip-abduction about x, then hip-pitch and knee-pitch, with a point
foot. Positive pitch angles swing the distal link forward (+x); the zero
configuration is a straight leg pointing down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spatial import skew

N_LEGS = 4
LEG_NAMES = ("FL", "FR", "RR", "RL")


class JointLimitError(ValueError):
    pass


class WorkspaceError(ValueError):
    pass


class UnsupportedContactError(ValueError):
    pass


def _default_hips() -> np.ndarray:
    return np.array(
        [[0.19, 0.12, 0.0], [0.19, -0.12, 0.0], [-0.19, -0.12, 0.0], [-0.19, 0.12, 0.0]]
    )


def _default_limits() -> np.ndarray:
    return np.array([[-2.6, 2.6], [-2.6, 2.6], [-2.6, 2.6]])


@dataclass
class RobotParams:
    mass: float = 12.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.1, 0.25, 0.3]))
    gravity: float = 9.81
    hip_offsets: np.ndarray = field(default_factory=_default_hips)
    l1: float = 0.21
    l2: float = 0.21
    # (lower, upper) for abduction, hip pitch, knee; shared by all legs
    joint_limits: np.ndarray = field(default_factory=_default_limits)

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        self.hip_offsets = np.asarray(self.hip_offsets, dtype=float).reshape(N_LEGS, 3)
        self.joint_limits = np.asarray(self.joint_limits, dtype=float).reshape(3, 2)
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if self.l1 <= 0.0 or self.l2 <= 0.0:
            raise ValueError("link lengths must be positive")
        if not np.allclose(self.inertia, self.inertia.T):
            raise ValueError("inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(self.inertia)) <= 0.0:
            raise ValueError("inertia must be positive definite")

    @property
    def reach(self) -> float:
        return self.l1 + self.l2


@dataclass
class GraspMap:
    G: np.ndarray
    mask: np.ndarray

    @property
    def n_contacts(self) -> int:
        return int(np.count_nonzero(self.mask))


def check_joint_limits(params: RobotParams, q_leg) -> None:
    q = np.asarray(q_leg, dtype=float)
    lo, hi = params.joint_limits[:, 0], params.joint_limits[:, 1]
    if np.any(q < lo) or np.any(q > hi):
        raise JointLimitError(f"joint angles {q} outside limits")


def _planar(params: RobotParams, q2: float, q3: float):
    s2, c2 = np.sin(q2), np.cos(q2)
    s23, c23 = np.sin(q2 + q3), np.cos(q2 + q3)
    x = params.l1 * s2 + params.l2 * s23
    z = -params.l1 * c2 - params.l2 * c23
    return x, z, (s2, c2, s23, c23)


def leg_fk(params: RobotParams, leg: int, q_leg, check_limits: bool = True) -> np.ndarray:
    """Foot position in the CoM frame."""
    q1, q2, q3 = np.asarray(q_leg, dtype=float).reshape(3)
    if check_limits:
        check_joint_limits(params, (q1, q2, q3))
    x, z, _ = _planar(params, q2, q3)
    s1, c1 = np.sin(q1), np.cos(q1)
    return params.hip_offsets[leg] + np.array([x, -s1 * z, c1 * z])


def leg_jacobian(params: RobotParams, leg: int, q_leg) -> np.ndarray:
    q1, q2, q3 = np.asarray(q_leg, dtype=float).reshape(3)
    x, z, (s2, c2, s23, c23) = _planar(params, q2, q3)
    s1, c1 = np.sin(q1), np.cos(q1)
    dx2 = params.l1 * c2 + params.l2 * c23
    dz2 = params.l1 * s2 + params.l2 * s23
    dx3 = params.l2 * c23
    dz3 = params.l2 * s23
    return np.array(
        [
            [0.0, dx2, dx3],
            [-c1 * z, -s1 * dz2, -s1 * dz3],
            [-s1 * z, c1 * dz2, c1 * dz3],
        ]
    )


def leg_ik(params: RobotParams, leg: int, target) -> np.ndarray:
    """Joint angles placing the foot at ``target`` (CoM frame).

    Selects knee >= 0 and the abduction branch with the foot below the hip.
    """
    t = np.asarray(target, dtype=float).reshape(3) - params.hip_offsets[leg]
    r = float(np.hypot(t[1], t[2]))
    q1 = float(np.arctan2(t[1], -t[2]))
    dist = float(np.hypot(t[0], r))
    l1, l2 = params.l1, params.l2
    if dist > l1 + l2 + 1e-12 or dist < abs(l1 - l2) - 1e-12:
        raise WorkspaceError(f"leg {leg}: target at {dist:.4f} m outside [{abs(l1 - l2)}, {l1 + l2}]")
    c3 = (dist**2 - l1**2 - l2**2) / (2.0 * l1 * l2)
    q3 = float(np.arccos(min(1.0, max(-1.0, c3))))
    k1 = l1 + l2 * np.cos(q3)
    k2 = l2 * np.sin(q3)
    q2 = float(np.arctan2(t[0], r) - np.arctan2(k2, k1))
    q = np.array([q1, q2, q3])
    check_joint_limits(params, q)
    return q


def build_grasp_map(R_c: np.ndarray, foot_positions, mask=None) -> GraspMap:
    """6x12 map from stacked foot forces to the CoM wrench.

    ``foot_positions`` are the foot tips in the CoM frame; the torque rows use
    their world-frame orientation R_c @ p.
    """
    feet = np.asarray(foot_positions, dtype=float).reshape(N_LEGS, 3)
    mask = np.ones(N_LEGS, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if np.count_nonzero(mask) < 3:
        raise UnsupportedContactError("at least three feet must be in contact")
    G = np.zeros((6, 3 * N_LEGS))
    for i in range(N_LEGS):
        if not mask[i]:
            continue
        G[:3, 3 * i : 3 * i + 3] = np.eye(3)
        G[3:, 3 * i : 3 * i + 3] = skew(R_c @ feet[i])
    return GraspMap(G, mask.copy())


def joint_torques(R_c: np.ndarray, params: RobotParams, leg: int, q_leg, f_i) -> np.ndarray:
    J = R_c @ leg_jacobian(params, leg, q_leg)
    return J.T @ np.asarray(f_i, dtype=float).reshape(3)


def inertia_matrix(params: RobotParams, R_c: np.ndarray) -> np.ndarray:
    """H_c = diag(m I3, R_c I R_c^T)."""
    H = np.zeros((6, 6))
    H[:3, :3] = params.mass * np.eye(3)
    H[3:, 3:] = R_c @ params.inertia @ R_c.T
    return H


def coriolis_matrix(params: RobotParams, R_c: np.ndarray, omega) -> np.ndarray:
    """Centroidal Coriolis matrix with C V = [0; omega x (I_c omega)].

    The factor S(omega) I_c keeps H_dot - 2 C skew-symmetric.
    """
    C = np.zeros((6, 6))
    C[3:, 3:] = skew(omega) @ (R_c @ params.inertia @ R_c.T)
    return C


def gravity_wrench(params: RobotParams) -> np.ndarray:
    return np.array([0.0, 0.0, params.mass * params.gravity, 0.0, 0.0, 0.0])
