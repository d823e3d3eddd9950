import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slipquad.controller import (
    AdaptiveController,
    ControllerGains,
    NearSingularStanceError,
    PoseError,
    WeightState,
    adapt_weights,
    control_wrench,
    distribute_forces,
    lyapunov,
    pose_errors,
    slip_evidence,
    time_scale,
)
from slipquad.model import RobotParams, build_grasp_map, gravity_wrench
from slipquad.sim import SimConfig, Simulator
from slipquad.spatial import rot_exp
from slipquad.trajectory import Ellipse, TrajectorySample

PARAMS = RobotParams()
GAINS = ControllerGains()


def stance(h=0.3):
    return np.array([[0.19, 0.12, -h], [0.19, -0.12, -h], [-0.19, -0.12, -h], [-0.19, 0.12, -h]])


def kkt(G, w, F_c):
    n = G.shape[1]
    K = np.block([[2 * np.diag(w), G.T], [G, np.zeros((6, 6))]])
    return np.linalg.solve(K, np.concatenate([np.zeros(n), F_c]))[:n]


wrenches = arrays(np.float64, 6, elements=st.floats(-200.0, 200.0)).filter(lambda v: np.linalg.norm(v) > 1e-3)
weights = arrays(np.float64, 12, elements=st.floats(1.0, 500.0))


@given(wrenches, weights, st.tuples(*[st.floats(-0.4, 0.4)] * 3))
def test_distribution_matches_kkt(F_c, w, rv):
    G = build_grasp_map(rot_exp(rv), stance()).G
    F = distribute_forces(G, F_c, w)
    assert np.linalg.norm(G @ F - F_c) <= 1e-9 * np.linalg.norm(F_c)
    assert np.allclose(F, kkt(G, w, F_c), atol=1e-8 * max(1.0, np.abs(F).max()))


@given(wrenches, weights, arrays(np.float64, 12, elements=st.floats(-1.0, 1.0)))
def test_distribution_is_minimum_weighted_norm(F_c, w, d):
    G = build_grasp_map(np.eye(3), stance()).G
    F = distribute_forces(G, F_c, w)
    # any feasible perturbation lies in the null space of G
    N = np.linalg.svd(G)[2][6:].T
    F2 = F + N @ (N.T @ d)
    assert F @ (w * F) <= F2 @ (w * F2) + 1e-9 * (1 + F @ (w * F))


def test_uniform_weights_share_standing_load():
    G = build_grasp_map(np.eye(3), stance()).G
    F = distribute_forces(G, gravity_wrench(PARAMS), np.full(12, 35.0)).reshape(4, 3)
    assert np.allclose(F[:, 2], PARAMS.mass * PARAMS.gravity / 4)
    assert np.allclose(F[:, :2], 0.0)


def test_raising_weight_moves_tangential_load_off_the_foot():
    G = build_grasp_map(np.eye(3), stance()).G
    F_c = np.array([40.0, 10.0, 118.0, 0.0, 0.0, 0.0])
    w = np.full(12, 35.0)
    base = distribute_forces(G, F_c, w).reshape(4, 3)
    w[6:8] = 100.0
    shifted = distribute_forces(G, F_c, w).reshape(4, 3)
    assert np.linalg.norm(shifted[2, :2]) < np.linalg.norm(base[2, :2])


def test_singular_stance_rejected():
    feet = np.zeros((4, 3))
    G = build_grasp_map(np.eye(3), feet).G
    with pytest.raises(NearSingularStanceError):
        distribute_forces(G, np.ones(6), np.full(12, 35.0))


def test_slip_evidence_deadzone():
    ev = slip_evidence([0.0, 0.25, 0.625, 1.0], 0.25)
    assert np.allclose(ev, [0.0, 0.0, 0.5, 1.0])


@given(arrays(np.float64, 4, elements=st.floats(0.0, 1.0)), st.floats(1e-4, 0.01))
def test_adaptation_step(p, dt):
    ws = WeightState.initial(35.0)
    out = adapt_weights(ws, p, GAINS, dt)
    assert np.allclose(out.w[0::3], 35.0 + GAINS.alpha * p * dt)
    assert np.array_equal(out.w[0::3], out.w[1::3])
    assert np.all(out.w[2::3] == 35.0)
    assert np.all(out.w >= ws.w)


def test_adaptation_rejects_bad_input():
    ws = WeightState.initial(35.0)
    with pytest.raises(ValueError):
        adapt_weights(ws, [1.2, 0, 0, 0], GAINS, 0.002)
    with pytest.raises(ValueError):
        adapt_weights(ws, [0, 0, 0, 0], GAINS, 0.0)


def test_weight_cap_warns(caplog):
    gains = ControllerGains(w_max=35.1)
    ws = WeightState.initial(35.0)
    with caplog.at_level(logging.WARNING):
        out = adapt_weights(ws, [1.0, 0.0, 0.0, 0.0], gains, 0.01)
    assert out.w[0] == 35.1
    assert "cap" in caplog.text


@given(arrays(np.float64, 4, elements=st.floats(35.0, 500.0)))
def test_time_scale_in_unit_interval(wx):
    ws = WeightState.initial(35.0)
    ws.w[0::3] = wx
    beta = time_scale(ws, GAINS)
    assert 0.0 < beta <= 1.0
    assert beta == pytest.approx(35.0 / wx.min())


def test_time_scale_is_one_until_every_foot_adapts():
    ws = WeightState.initial(35.0)
    ws.w[0:9:3] = [80.0, 60.0, 90.0]
    assert time_scale(ws, GAINS) == 1.0


def test_lyapunov_position_term():
    err = PoseError(np.array([0.02, 0.01, -0.001]), np.zeros(3), np.zeros(6))
    assert lyapunov(err, GAINS, PARAMS, np.eye(3)) == pytest.approx(0.7515)


def test_lyapunov_is_positive_definite(rng):
    for _ in range(50):
        err = PoseError(rng.normal(size=3), rng.normal(size=3), rng.normal(size=6))
        assert lyapunov(err, GAINS, PARAMS, rot_exp(rng.normal(size=3))) > 0.0


def test_pose_errors_zero_on_reference():
    ref = Ellipse([0, 0, 0.356], 0.04).at(0.7)
    sim = Simulator(PARAMS, SimConfig(noise=False))
    state = sim.initial_state(ref.p, [[0.19, 0.12, 0], [0.19, -0.12, 0], [-0.19, -0.12, 0], [-0.19, 0.12, 0]],
                              R=ref.R, v=ref.dp, omega=ref.omega)
    err = pose_errors(state, ref)
    assert np.allclose(err.e_p, 0.0) and np.allclose(err.e_o, 0.0) and np.allclose(err.e_v, 0.0)


def test_control_wrench_static_hold_is_gravity():
    ref = TrajectorySample(p=np.array([0, 0, 0.3]))
    sim = Simulator(PARAMS, SimConfig(noise=False))
    state = sim.initial_state(ref.p, [[0.19, 0.12, 0], [0.19, -0.12, 0], [-0.19, -0.12, 0], [-0.19, 0.12, 0]])
    zero = PoseError(np.zeros(3), np.zeros(3), np.zeros(6))
    assert np.allclose(control_wrench(zero, state, ref, GAINS, PARAMS), gravity_wrench(PARAMS))


def test_control_wrench_feedback_signs():
    ref = TrajectorySample(p=np.array([0, 0, 0.3]))
    sim = Simulator(PARAMS, SimConfig(noise=False))
    state = sim.initial_state([0.01, 0, 0.3], [[0.19, 0.12, 0], [0.19, -0.12, 0], [-0.19, -0.12, 0], [-0.19, 0.12, 0]])
    err = pose_errors(state, ref)
    F = control_wrench(err, state, ref, GAINS, PARAMS) - gravity_wrench(PARAMS)
    assert F[0] == pytest.approx(-GAINS.kp * 0.01)


def test_gains_validation():
    with pytest.raises(ValueError):
        ControllerGains(kp=-1.0)
    with pytest.raises(ValueError):
        ControllerGains(Kv=np.diag([1.0, 1.0, 1.0, 1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        ControllerGains(slip_deadzone=1.0)


def _controller(layer1=True, layer2=True):
    traj = Ellipse([0, 0, 0.356], 0.04)
    sim = Simulator(PARAMS, SimConfig(noise=False))
    ref = traj.initial()
    state = sim.initial_state(ref.p, [[0.19, 0.12, 0], [0.19, -0.12, 0], [-0.19, -0.12, 0], [-0.19, 0.12, 0]],
                              v=ref.dp, omega=ref.omega)
    return AdaptiveController(PARAMS, ControllerGains(), traj, None, layer1, layer2), state


def test_cycle_with_full_slip_scales_time():
    ctl, state = _controller()
    for _ in range(100):
        out = ctl.control_cycle(state, None, 0.002, slip_override=np.ones(4))
    assert np.all(out.weights.tangential > 35.0)
    assert out.weights.beta == pytest.approx(35.0 / out.weights.tangential.min())
    assert out.weights.t_v < 100 * 0.002


def test_cycle_layers_off_keep_nominal():
    ctl, state = _controller(layer1=False, layer2=False)
    out = ctl.control_cycle(state, None, 0.002, slip_override=np.ones(4))
    assert np.all(out.weights.w == 35.0)
    assert out.weights.beta == 1.0


def test_cycle_layer2_off_keeps_clock():
    ctl, state = _controller(layer2=False)
    for _ in range(10):
        out = ctl.control_cycle(state, None, 0.002, slip_override=np.ones(4))
    assert out.weights.beta == 1.0
    assert out.weights.t_v == pytest.approx(0.02)


def test_cycle_forces_realize_wrench():
    ctl, state = _controller()
    out = ctl.control_cycle(state, None, 0.002)
    G = build_grasp_map(state.R, state.foot_positions_body()).G
    assert np.allclose(G @ out.forces.ravel(), out.wrench)
    assert out.torques.shape == (4, 3)
