import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slipquad.model import (
    N_LEGS,
    JointLimitError,
    RobotParams,
    UnsupportedContactError,
    WorkspaceError,
    build_grasp_map,
    check_joint_limits,
    coriolis_matrix,
    gravity_wrench,
    inertia_matrix,
    joint_torques,
    leg_fk,
    leg_ik,
    leg_jacobian,
)
from slipquad.spatial import rot_exp

PARAMS = RobotParams()
angles = st.floats(-1.2, 1.2, allow_nan=False)
knees = st.floats(0.2, 2.4, allow_nan=False)
legs = st.integers(0, N_LEGS - 1)


def stance(sx=0.19, sy=0.12, h=0.3):
    return np.array([[sx, sy, -h], [sx, -sy, -h], [-sx, -sy, -h], [-sx, sy, -h]])


@given(legs, angles, angles, knees)
def test_jacobian_matches_finite_differences(leg, q1, q2, q3):
    q = np.array([q1, q2, q3])
    h = 1e-6
    fd = np.column_stack(
        [(leg_fk(PARAMS, leg, q + h * e) - leg_fk(PARAMS, leg, q - h * e)) / (2 * h) for e in np.eye(3)]
    )
    assert np.allclose(leg_jacobian(PARAMS, leg, q), fd, atol=1e-8)


@given(legs, st.floats(-0.8, 0.8), angles, knees)
def test_ik_inverts_fk(leg, q1, q2, q3):
    q = np.array([q1, q2, q3])
    p = leg_fk(PARAMS, leg, q)
    # IK picks the branch with the foot below the hip
    if p[2] - PARAMS.hip_offsets[leg][2] >= -1e-3:
        return
    q_ik = leg_ik(PARAMS, leg, p)
    assert np.allclose(leg_fk(PARAMS, leg, q_ik), p, atol=1e-9)


def test_standing_pose_is_straight_down():
    for leg in range(N_LEGS):
        target = PARAMS.hip_offsets[leg] + [0.0, 0.0, -0.3]
        q = leg_ik(PARAMS, leg, target)
        assert abs(q[0]) < 1e-12
        assert np.allclose(leg_fk(PARAMS, leg, q), target)


def test_ik_out_of_reach():
    with pytest.raises(WorkspaceError):
        leg_ik(PARAMS, 0, PARAMS.hip_offsets[0] + [0.0, 0.0, -0.43])


def test_joint_limits_enforced():
    with pytest.raises(JointLimitError):
        check_joint_limits(PARAMS, [0.0, 3.0, 0.5])
    check_joint_limits(PARAMS, [0.0, 2.5, 0.5])


def test_joint_torques_are_jacobian_transpose():
    q = np.array([0.1, 0.4, 1.1])
    R = rot_exp([0.0, 0.1, 0.2])
    f = np.array([3.0, -2.0, 30.0])
    tau = joint_torques(R, PARAMS, 1, q, f)
    # virtual work: tau . dq = f . dp_world
    dq = np.array([1e-7, -2e-7, 1.5e-7])
    dp = R @ (leg_fk(PARAMS, 1, q + dq) - leg_fk(PARAMS, 1, q))
    assert np.isclose(tau @ dq, f @ dp, rtol=1e-5)


def test_grasp_map_sums_forces_and_moments(rng):
    R = rot_exp([0.1, -0.2, 0.3])
    feet = stance() + 0.01 * rng.normal(size=(4, 3))
    F = rng.normal(size=(4, 3))
    G = build_grasp_map(R, feet).G
    force = F.sum(axis=0)
    torque = sum(np.cross(R @ feet[i], F[i]) for i in range(N_LEGS))
    assert np.allclose(G @ F.ravel(), np.concatenate([force, torque]))


def test_grasp_map_full_rank_for_four_feet():
    assert np.linalg.matrix_rank(build_grasp_map(np.eye(3), stance()).G) == 6


def test_grasp_map_mask():
    gm = build_grasp_map(np.eye(3), stance(), mask=[True, True, False, True])
    assert np.all(gm.G[:, 6:9] == 0.0)
    assert gm.n_contacts == 3
    with pytest.raises(UnsupportedContactError):
        build_grasp_map(np.eye(3), stance(), mask=[True, False, False, True])


@given(st.tuples(*[st.floats(-2, 2)] * 3), st.tuples(*[st.floats(-3, 3)] * 3))
def test_inertia_derivative_minus_twice_coriolis_is_skew(rv, w):
    R = rot_exp(rv)
    w = np.array(w)
    # dH/dt for R_dot = S(w) R
    dt = 1e-6
    H1 = inertia_matrix(PARAMS, rot_exp(w * dt) @ R)
    H0 = inertia_matrix(PARAMS, rot_exp(-w * dt) @ R)
    dH = (H1 - H0) / (2 * dt)
    N = dH - 2.0 * coriolis_matrix(PARAMS, R, w)
    assert np.allclose(N, -N.T, atol=1e-5)


def test_coriolis_gives_gyroscopic_torque():
    R = rot_exp([0.2, 0.1, -0.3])
    w = np.array([0.5, -1.0, 2.0])
    I_w = R @ PARAMS.inertia @ R.T
    CV = coriolis_matrix(PARAMS, R, w) @ np.concatenate([[1.0, 2.0, 3.0], w])
    assert np.allclose(CV[:3], 0.0)
    assert np.allclose(CV[3:], np.cross(w, I_w @ w))


def test_gravity_wrench():
    assert np.allclose(gravity_wrench(PARAMS), [0, 0, 12.0 * 9.81, 0, 0, 0])


@pytest.mark.parametrize(
    "kw",
    [{"mass": 0.0}, {"l1": -0.1}, {"inertia": np.diag([1.0, -1.0, 1.0])}, {"inertia": [[1, 0.1, 0], [0, 1, 0], [0, 0, 1]]}],
)
def test_params_validation(kw):
    with pytest.raises(ValueError):
        RobotParams(**kw)
