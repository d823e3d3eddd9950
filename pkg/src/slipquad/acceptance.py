"""Acceptance suite: eight pass/fail checks over the controller and the bundled scenarios.

Scenario runs are shared through a ``RunCache`` so each bundled scenario is
simulated once per suite (the determinism check re-runs them on purpose).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import bundled_names, load_bundled
from .controller import ControllerGains, PoseError, control_wrench, distribute_forces
from .estimator import EstimatorConfig, SlipEstimator, kde_near_zero_prob, silverman_bandwidth
from .harness import INSTABILITY, RunResult, simulate
from .model import N_LEGS, RobotParams, build_grasp_map, gravity_wrench, leg_fk, leg_jacobian
from .sim import RobotState, SimConfig, Simulator
from .spatial import rot_exp, rot_log
from .trajectory import Ellipse

# initial Scenario 1 position error [-2, -1, 0.1] cm
SCENARIO1_ERROR0 = float(np.linalg.norm([0.02, 0.01, -0.001]))
BETA_BAND = (0.6, 0.95)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float | None = None

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        limit = "" if self.budget is None else f" / {self.budget:.0f}s"
        return f"[{verdict}] {self.number}. {self.name}: {self.detail} ({self.seconds:.1f}s{limit})"


@dataclass
class RunCache:
    runs: dict = field(default_factory=dict)

    def get(self, name: str, **overrides) -> RunResult:
        key = (name, tuple(sorted(overrides.items())))
        if key not in self.runs:
            cfg = load_bundled(name)
            if overrides:
                cfg = cfg.with_overrides(**overrides)
            self.runs[key] = simulate(cfg)
        return self.runs[key]


def _timed(number, name, budget, fn, *args) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn(*args)
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        ok, detail = False, f"{detail}; over the {budget:.0f}s budget"
    return CriterionResult(number, name, bool(ok), detail, dt, budget)


def random_rotation(rng, max_angle: float = np.pi) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return rot_exp(axis * rng.uniform(0.0, max_angle))


def random_stance(rng) -> np.ndarray:
    """Foot positions (CoM frame) scattered around a nominal rectangle below the body."""
    base = np.array([[1, 1], [1, -1], [-1, -1], [-1, 1]]) * [0.2, 0.13]
    xy = base + rng.uniform(-0.06, 0.06, size=(N_LEGS, 2))
    z = rng.uniform(-0.4, -0.2, size=(N_LEGS, 1))
    return np.hstack([xy, z])


def kkt_solution(G, w, F_c) -> np.ndarray:
    """min F^T W F s.t. G F = F_c through the full KKT system."""
    n, m = G.shape[1], G.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = 2.0 * np.diag(w)
    K[:n, n:] = G.T
    K[n:, :n] = G
    rhs = np.concatenate([np.zeros(n), F_c])
    return np.linalg.solve(K, rhs)[:n]


def check_pseudo_inverse(n_cases: int = 10_000, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst_res = worst_cost = 0.0
    for _ in range(n_cases):
        R = random_rotation(rng, 0.5)
        G = build_grasp_map(R, random_stance(rng)).G
        w = rng.uniform(1.0, 200.0, size=3 * N_LEGS)
        F_c = rng.normal(size=6) * [50, 50, 150, 10, 10, 10]
        F_a = distribute_forces(G, F_c, w)
        worst_res = max(worst_res, np.linalg.norm(G @ F_a - F_c) / np.linalg.norm(F_c))
        F_k = kkt_solution(G, w, F_c)
        cost, cost_k = F_a @ (w * F_a), F_k @ (w * F_k)
        worst_cost = max(worst_cost, abs(cost - cost_k) / cost_k)
    ok = worst_res < 1e-8 and worst_cost < 1e-9
    return ok, f"{n_cases} cases, max residual {worst_res:.1e} (< 1e-8), max cost gap {worst_cost:.1e} (< 1e-9)"


def check_lyapunov():
    base = load_bundled("scenario1")
    cfg = base.with_overrides(sim=replace(base.sim, ideal_contacts=True))
    res = simulate(cfg)
    L = res.log.col("L")
    eps = 1e-3 * L[0]
    worst_rise = float(np.max(np.diff(L))) if len(L) > 1 else 0.0
    e_p = res.log.col("e_p_norm")
    t = res.log.col("t")
    target = 0.01 * SCENARIO1_ERROR0
    below = np.flatnonzero((e_p < target) & (t <= 5.0))
    t_hit = float(t[below[0]]) if below.size else None
    ok = res.stable and worst_rise <= eps and t_hit is not None
    hit = "never" if t_hit is None else f"{t_hit:.2f}s"
    return ok, (
        f"max per-step rise of L {worst_rise:.2e} (allowed {eps:.2e}); "
        f"|e_p| < {target * 1e3:.3f} mm at {hit}"
    )


def settle_time(values: np.ndarray, t: np.ndarray) -> float:
    """Time of the last change in a piecewise-constant trace (start time if it never changes)."""
    changed = np.flatnonzero(np.diff(values) != 0.0)
    return float(t[changed[-1] + 1]) if changed.size else float(t[0])


def check_scenario2(cache: RunCache):
    res, noad = cache.get("scenario2"), cache.get("scenario2_noadapt")
    tlog, S = res.log, res.summary
    w = tlog.legs("w")
    diag = np.array(S["final_weight_diagonal"])
    w0 = res.config.gains.w0
    others = np.delete(w, 2, axis=1)
    a = (
        bool(np.all(others == w0))
        and bool(w[-1, 2] > w0)
        and bool(np.all(np.delete(diag.reshape(N_LEGS, 3), 2, axis=0) == w0))
        and diag[6] == diag[7]
        and diag[8] == w0
    )
    b = bool(np.all(tlog.col("beta") == 1.0))
    t = tlog.col("t")
    t_set = settle_time(w[:, 2], t)
    after = t >= t_set
    slip_after = int(np.count_nonzero(tlog.col("mode_3")[after] == 1))
    margin_after = float(tlog.col("cone_margin_3")[after].min())
    c = res.stable and t_set < t[-1] - 1.0 and slip_after == 0 and margin_after >= 0.0
    d = noad.status == INSTABILITY
    parts = [
        f"(a) {'ok' if a else 'FAIL'} w3={w[-1, 2]:.2f}, others={sorted(set(others.ravel().tolist()))}",
        f"(b) {'ok' if b else 'FAIL'} beta min {tlog.col('beta').min():.3f}",
        f"(c) {'ok' if c else 'FAIL'} settled at {t_set:.2f}s, slip steps after {slip_after}, "
        f"min cone margin after {margin_after:.2f} N",
        f"(d) {'ok' if d else 'FAIL'} no-adapt {noad.status}"
        + ("" if noad.fault_time is None else f" at {noad.fault_time:.2f}s ({noad.reason})"),
    ]
    return a and b and c and d, "; ".join(parts)


def check_scenario3(cache: RunCache):
    res, noad = cache.get("scenario3"), cache.get("scenario3_noadapt")
    tlog = res.log
    w0 = res.config.gains.w0
    w_final = tlog.legs("w")[-1]
    beta = tlog.col("beta")
    t = tlog.col("t")
    tail = beta[t >= t[-1] - 2.0]
    spread = float(tail.max() - tail.min())
    final = float(beta[-1])
    lo, hi = BETA_BAND
    ok_w = bool(np.all(w_final > w0))
    ok_b = res.stable and beta.min() < 1.0 and spread < 1e-3 and lo <= final <= hi
    ok_n = noad.status == INSTABILITY
    detail = (
        f"w_final={np.round(w_final, 1).tolist()} ({'ok' if ok_w else 'FAIL'}); "
        f"beta settles at {final:.3f} with last-2s spread {spread:.1e}, band [{lo}, {hi}] "
        f"({'ok' if ok_b else 'FAIL'}); no-adapt {noad.status}"
        + ("" if noad.fault_time is None else f" at {noad.fault_time:.2f}s ({noad.reason})")
    )
    return ok_w and ok_b and ok_n, detail


def synthetic_trace(rng, sim: Simulator, n_still: int, n_slide: int, speed: float, dt: float):
    """IMU samples for a foot that rests ``n_still`` cycles and then slides for ``n_slide``."""
    n = np.array([0.0, 0.0, 1.0])
    heading = rng.uniform(0.0, 2.0 * np.pi)
    v_slide = speed * np.array([np.cos(heading), np.sin(heading), 0.0])
    v_prev = np.zeros(3)
    out = []
    for k in range(n_still + n_slide):
        v = v_slide if k >= n_still else np.zeros(3)
        out.append(sim.synthesize_imu(v_prev, v, n, dt, k * dt))
        v_prev = v
    return out


def check_estimator(n_traces: int = 100):
    cfg = EstimatorConfig()
    dt, f_z = 0.002, 30.0
    still, slide, fusion_err = [], [], 0.0
    for seed in range(n_traces):
        rng = np.random.default_rng(seed)
        sim = Simulator(RobotParams(), SimConfig(), seed=seed)
        est = SlipEstimator(cfg, n_feet=1)
        for imu in synthetic_trace(rng, sim, 2 * cfg.window, 0, 0.0, dt):
            est.update(0, imu, f_z)
        still.append(est.p_stable[0])

        speed = rng.uniform(0.1, 0.3)
        est = SlipEstimator(cfg, n_feet=1)
        for imu in synthetic_trace(rng, sim, cfg.window, cfg.window, speed, dt):
            belief = est.update(0, imu, f_z)
        slide.append(belief.p_stable)

        window = np.asarray(belief.window)
        per_axis = [
            kde_near_zero_prob(window[:, k], silverman_bandwidth(window[:, k], cfg.bandwidth_floor), h)
            for k, h in enumerate(cfg.halfwidths)
        ]
        fusion_err = max(fusion_err, abs(belief.p_stable - float(np.prod(per_axis))))
    m_still, m_slide = float(np.mean(still)), float(np.mean(slide))
    ok = m_still > 0.9 and m_slide < 0.2 and fusion_err < 1e-12
    return ok, (
        f"mean P_stable still {m_still:.3f} (> 0.9), sliding after one window {m_slide:.3f} (< 0.2), "
        f"fusion error {fusion_err:.1e}"
    )


def _polyline_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest segment of ``poly``."""
    a, b = poly[:-1], poly[1:]
    ab = b - a
    L2 = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
    out = np.empty(len(points))
    for k, p in enumerate(points):
        s = np.clip(np.einsum("ij,ij->i", p - a, ab) / L2, 0.0, 1.0)
        out[k] = np.sqrt(np.min(np.sum((a + s[:, None] * ab - p) ** 2, axis=1)))
    return out


def path_hausdorff(path_a: np.ndarray, path_b: np.ndarray, t_a: np.ndarray, t_b: np.ndarray,
                   span: float = 0.05) -> float:
    """Symmetric Hausdorff distance between two sampled paths treated as polylines.

    Both paths are parametrized by the same clock; each point is compared only
    with the other path's segments within ``span`` of its own clock value.
    """

    def directed(p, tp, q, tq):
        worst = 0.0
        for lo in np.arange(tp[0], tp[-1] + span, span):
            sel = (tp >= lo) & (tp < lo + span)
            if not sel.any():
                continue
            near = (tq >= lo - span) & (tq < lo + 2 * span)
            if np.count_nonzero(near) < 2:
                continue
            worst = max(worst, float(_polyline_distance(p[sel], q[near]).max()))
        return worst

    return max(directed(path_a, t_a, path_b, t_b), directed(path_b, t_b, path_a, t_a))


def check_time_scaling(cache: RunCache):
    bad_range, bad_unit = [], []
    for name in bundled_names():
        res = cache.get(name)
        beta = res.log.col("beta")
        if np.any(beta <= 0.0) or np.any(beta > 1.0):
            bad_range.append(name)
        w_min = res.log.legs("w").min(axis=1)
        if np.any(beta[w_min == res.config.gains.w0] != 1.0):
            bad_unit.append(name)

    res = cache.get("scenario3")
    t_v = res.log.col("t_v")
    traced = np.column_stack([res.log.col(f"pd_{a}") for a in "xyz"])
    spec = res.config.trajectory
    ref = Ellipse(spec.center, spec.a_x, spec.a_z, spec.f_p, spec.theta_a, spec.f_o)
    # the first control cycle already samples t_v = beta * dt, so compare over the traced span
    s = np.linspace(t_v[0], t_v[-1], 20 * len(t_v))
    dense = np.array([ref.at(x).p for x in s])
    dist = path_hausdorff(traced, dense, t_v, s)
    ok = not bad_range and not bad_unit and dist < 1e-6
    return ok, (
        f"beta in (0, 1] everywhere: {'yes' if not bad_range else bad_range}; "
        f"beta = 1 whenever min w = w0: {'yes' if not bad_unit else bad_unit}; "
        f"scenario3 path Hausdorff distance to the beta=1 path {dist:.1e} m (< 1e-6)"
    )


def check_determinism(cache: RunCache):
    mismatched = []
    for name in bundled_names():
        first = cache.get(name).log.to_csv_text()
        again = simulate(load_bundled(name)).log.to_csv_text()
        if first.encode() != again.encode():
            mismatched.append(name)
    ok = not mismatched
    return ok, f"{len(bundled_names())} scenarios re-run, byte-identical: {'all' if ok else mismatched}"


def feedforward_wrench(traj: Ellipse, t: float, beta: float, params: RobotParams, gains) -> np.ndarray:
    """Controller wrench minus gravity with the robot exactly on the reference."""
    ref = traj.at(beta * t, beta)
    state = RobotState(p=ref.p, R=ref.R, v=ref.dp, omega=ref.omega, q=np.zeros((N_LEGS, 3)), contacts=[])
    zero = PoseError(np.zeros(3), np.zeros(3), np.zeros(6))
    return control_wrench(zero, state, ref, gains, params) - gravity_wrench(params)


def momentum(traj: Ellipse, t: float, beta: float, params: RobotParams) -> np.ndarray:
    ref = traj.at(beta * t, beta)
    return np.concatenate([params.mass * ref.dp, ref.R @ params.inertia @ ref.R.T @ ref.omega])


FF_DT = 0.002
# forward differences of the momentum are first-order accurate: error <= FF_SLOPE * dt
FF_SLOPE = 100.0


def check_numerics(seed: int = 0):
    rng = np.random.default_rng(seed)
    params = RobotParams()
    h = 1e-6
    jac_err = 0.0
    for _ in range(200):
        leg = int(rng.integers(N_LEGS))
        q = rng.uniform(-1.5, 1.5, 3)
        J = leg_jacobian(params, leg, q)
        fd = np.column_stack([
            (leg_fk(params, leg, q + h * e, False) - leg_fk(params, leg, q - h * e, False)) / (2 * h)
            for e in np.eye(3)
        ])
        jac_err = max(jac_err, float(np.abs(J - fd).max()))

    rot_err = 0.0
    for _ in range(1000):
        v = rng.normal(size=3)
        v *= rng.uniform(0.0, np.pi - 1e-3) / np.linalg.norm(v)
        rot_err = max(rot_err, float(np.linalg.norm(rot_log(rot_exp(v)) - v)))
        R = random_rotation(rng)
        rot_err = max(rot_err, float(np.abs(rot_exp(rot_log(R)) - R).max()))

    traj = Ellipse([0.0, 0.0, 0.356], a_x=0.08, a_z=0.02, theta_a=0.3)
    gains = ControllerGains()
    ff_err = 0.0
    for beta in (1.0, 0.7):
        for t in np.linspace(0.0, 5.0, 41):
            oracle = (momentum(traj, t + FF_DT, beta, params) - momentum(traj, t, beta, params)) / FF_DT
            ff_err = max(ff_err, float(np.abs(feedforward_wrench(traj, t, beta, params, gains) - oracle).max()))
    bound = FF_SLOPE * FF_DT
    ok = jac_err < 1e-6 and rot_err < 1e-7 and ff_err < bound
    return ok, (
        f"Jacobian vs finite differences {jac_err:.1e} (< 1e-6); rot_log/rot_exp round trip {rot_err:.1e} (< 1e-7); "
        f"feedforward vs momentum difference {ff_err:.2e} (< {bound:.2f} = {FF_SLOPE:.0f}*dt)"
    )


CRITERIA = {
    1: ("pseudo-inverse correctness", 10.0),
    2: ("Lyapunov decrease", 30.0),
    3: ("scenario 2 reproduction", 60.0),
    4: ("scenario 3 reproduction", 60.0),
    5: ("estimator discrimination", 10.0),
    6: ("time-scaling invariants", None),
    7: ("determinism", None),
    8: ("numerical cross-checks", None),
}


def run_criterion(number: int, cache: RunCache | None = None) -> CriterionResult:
    cache = cache or RunCache()
    name, budget = CRITERIA[number]
    fn, args = {
        1: (check_pseudo_inverse, ()),
        2: (check_lyapunov, ()),
        3: (check_scenario2, (cache,)),
        4: (check_scenario3, (cache,)),
        5: (check_estimator, ()),
        6: (check_time_scaling, (cache,)),
        7: (check_determinism, (cache,)),
        8: (check_numerics, ()),
    }[number]
    return _timed(number, name, budget, fn, *args)


def run_all(numbers=None, cache: RunCache | None = None, echo=None) -> list[CriterionResult]:
    cache = cache or RunCache()
    results = []
    for n in numbers or sorted(CRITERIA):
        r = run_criterion(n, cache)
        if echo is not None:
            echo(r.line())
        results.append(r)
    return results

