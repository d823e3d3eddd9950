"""Small 3-D spatial helpers: skew map, SO(3) exp/log, wrench/twist containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_PI_BRANCH_TOL = 1e-6


def vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite vector: {a}")
    return a


def skew(v) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S: np.ndarray) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def rot_exp(v) -> np.ndarray:
    """Rodrigues formula. rot_exp(k*theta) is the rotation by theta about unit axis k."""
    v = np.asarray(v, dtype=float).reshape(3)
    theta = float(np.linalg.norm(v))
    K = skew(v)
    if theta < 1e-8:
        # second-order Taylor terms keep the result orthonormal to ~1e-24
        return np.eye(3) + K + 0.5 * K @ K
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * K @ K


def rot_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector k*theta of R with theta in [0, pi]."""
    R = np.asarray(R, dtype=float).reshape(3, 3)
    tr = float(np.trace(R))
    cos_t = min(1.0, max(-1.0, 0.5 * (tr - 1.0)))
    if tr <= -1.0 + _PI_BRANCH_TOL:
        return _log_near_pi(R)
    theta = float(np.arccos(cos_t))
    w = vee(R - R.T)
    if theta < 1e-8:
        return 0.5 * w
    return theta / (2.0 * np.sin(theta)) * w


def _log_near_pi(R: np.ndarray) -> np.ndarray:
    # sym(R) = cos(t) I + (1 - cos(t)) k k^T, so k k^T is recovered exactly
    w = vee(R - R.T)
    sin_t = 0.5 * np.linalg.norm(w)
    cos_t = max(-1.0, 0.5 * (np.trace(R) - 1.0))
    theta = float(np.arctan2(sin_t, cos_t))
    B = (0.5 * (R + R.T) - cos_t * np.eye(3)) / (1.0 - cos_t)
    i = int(np.argmax(np.diag(B)))
    k = B[i] / np.sqrt(max(B[i, i], 1e-300))
    k /= np.linalg.norm(k)
    # the antisymmetric part carries the sign of sin(theta) * k
    if np.dot(w, k) < 0.0:
        k = -k
    return theta * k


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Nearest rotation in Frobenius norm (polar factor via SVD)."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0.0:
        U[:, -1] = -U[:, -1]
        Q = U @ Vt
    return Q


def is_rotation(R: np.ndarray, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    return (
        R.shape == (3, 3)
        and np.allclose(R.T @ R, np.eye(3), atol=tol)
        and abs(np.linalg.det(R) - 1.0) < tol
    )


@dataclass
class Wrench:
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])

    @classmethod
    def from_vector(cls, v) -> "Wrench":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3].copy(), v[3:].copy())


@dataclass
class Twist:
    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])

    @classmethod
    def from_vector(cls, v) -> "Twist":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3].copy(), v[3:].copy())
