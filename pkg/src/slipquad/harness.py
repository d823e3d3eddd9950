"""Scenario runner and telemetry.

A run wires the simulator, the slip estimator and the adaptive controller,
steps them at a fixed rate and records one telemetry row per control cycle.
The run ends early with status "instability" when the simulator faults
(leg out of reach), a foot loses contact, the CoM drops below half its
initial height or the position error exceeds 0.5 m.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .controller import AdaptiveController
from .estimator import SlipEstimator
from .model import N_LEGS
from .sim import AIRBORNE, SLIP, STICK, Simulator, SimulationFault, cone_margin

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODE_CODES = {STICK: 0, SLIP: 1, AIRBORNE: 2}
COM_DROP_FRACTION = 0.5
MAX_POSITION_ERROR = 0.5
# a foot unloaded for this long counts as lost contact; shorter gaps are transient unloading
LIFTOFF_TIME = 0.05

COMPLETED, INSTABILITY = "completed", "instability"


def _columns() -> list[str]:
    cols = ["t", "t_v", "beta"]
    cols += [f"e_p_{a}" for a in "xyz"] + [f"e_o_{a}" for a in "xyz"]
    cols += [f"e_v_{k}" for k in range(6)]
    cols += ["e_p_norm", "e_o_norm", "e_v_norm", "L"]
    cols += [f"p_{a}" for a in "xyz"] + [f"pd_{a}" for a in "xyz"]
    legs = range(1, N_LEGS + 1)
    cols += [f"w_{i}" for i in legs]
    cols += [f"P_{i}" for i in legs] + [f"slip_prob_{i}" for i in legs]
    cols += [f"f_{i}_{a}" for i in legs for a in "xyz"]
    cols += [f"cone_margin_{i}" for i in legs]
    cols += [f"mode_{i}" for i in legs]
    cols += [f"fz_{i}" for i in legs]
    return cols


COLUMNS = _columns()


class SchemaError(ValueError):
    pass


@dataclass
class TelemetryLog:
    """Per-cycle telemetry. ``mode_i`` and ``fz_i`` describe the step that follows the cycle."""

    columns: list
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))
        if len(self) > 1 and np.any(np.diff(self.data[:, self.columns.index("t")]) <= 0.0):
            raise SchemaError("timestamps must increase monotonically")

    def __len__(self) -> int:
        return self.data.shape[0]

    def col(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def legs(self, prefix: str) -> np.ndarray:
        """Columns ``prefix_1 .. prefix_4`` stacked as (rows, 4)."""
        return np.column_stack([self.col(f"{prefix}_{i}") for i in range(1, N_LEGS + 1)])

    def to_csv_text(self) -> str:
        lines = [f"# {k}={v}" for k, v in self.meta.items()]
        lines.append(",".join(self.columns))
        lines.extend(",".join(f"{x:.9g}" for x in row) for row in self.data)
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text())
        return path

    @classmethod
    def from_csv(cls, path) -> "TelemetryLog":
        meta, header, rows = {}, None, []
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key] = value
                elif header is None:
                    header = line.split(",")
                else:
                    rows.append([float(x) for x in line.split(",")])
        if header is None:
            raise SchemaError(f"{path}: no header row")
        if meta.get("schema") != str(SCHEMA_VERSION):
            raise SchemaError(f"{path}: schema {meta.get('schema')!r}, expected {SCHEMA_VERSION}")
        return cls(header, np.array(rows).reshape(-1, len(header)), meta)


@dataclass
class RunResult:
    config: ScenarioConfig
    log: TelemetryLog
    status: str
    reason: str | None
    fault_time: float | None
    summary: dict
    csv_path: Path | None = None
    json_path: Path | None = None

    @property
    def stable(self) -> bool:
        return self.status == COMPLETED


def build(config: ScenarioConfig):
    """Simulator, controller and initial state for a scenario."""
    sim = Simulator(config.params, config.sim, seed=config.seed)
    traj = config.trajectory.build()
    ref = traj.initial()
    p0 = ref.p if config.position is None else np.asarray(config.position, dtype=float)
    centre = p0[:2] if config.stance_center is None else np.asarray(config.stance_center, dtype=float)
    sx, sy = config.stance
    feet = [[centre[0] + a * sx, centre[1] + b * sy, 0.0] for a, b in ((1, 1), (1, -1), (-1, -1), (-1, 1))]
    v0 = ref.dp if config.on_reference else None
    w0 = ref.omega if config.on_reference else None
    state = sim.initial_state(p0, feet, R=ref.R, v=v0, omega=w0)
    estimator = SlipEstimator(config.estimator)
    ctl = AdaptiveController(
        config.params, config.gains, traj, estimator, layer1=config.layer1, layer2=config.layer2
    )
    return sim, ctl, state


def _row(t, cyc, state, contacts, mu) -> list:
    err = cyc.error
    ws = cyc.weights
    margins = [cone_margin(cyc.forces[i], contacts[i].normal, mu[i]) for i in range(N_LEGS)]
    return [
        t, ws.t_v, ws.beta,
        *err.e_p, *err.e_o, *err.e_v,
        np.linalg.norm(err.e_p), np.linalg.norm(err.e_o), np.linalg.norm(err.e_v), cyc.lyapunov,
        *state.p, *cyc.ref.p,
        *ws.tangential,
        *cyc.p_stable, *(1.0 - cyc.p_stable),
        *cyc.forces.ravel(),
        *margins,
        *(MODE_CODES[c.mode] for c in contacts),
        *(c.normal_force for c in contacts),
    ]


def _verdict(state, z0, cyc, airborne_time):
    lost = np.flatnonzero(airborne_time >= LIFTOFF_TIME - 1e-12)
    if lost.size:
        return f"contact lost on foot {[int(i) + 1 for i in lost]}"
    if state.p[2] < COM_DROP_FRACTION * z0:
        return f"CoM height {state.p[2]:.3f} m below {COM_DROP_FRACTION:.0%} of {z0:.3f} m"
    if np.linalg.norm(cyc.error.e_p) > MAX_POSITION_ERROR:
        return f"position error {np.linalg.norm(cyc.error.e_p):.3f} m"
    if not (np.all(np.isfinite(state.p)) and np.all(np.isfinite(state.v))):
        return "non-finite state"
    return None


def simulate(config: ScenarioConfig) -> RunResult:
    """Run a scenario in memory."""
    sim, ctl, state = build(config)
    mu = np.asarray(config.sim.mu_static, dtype=float)
    z0 = float(state.p[2])
    n_steps = int(round(config.duration / config.dt))
    rows = []
    imu = None
    status, reason, fault_time = COMPLETED, None, None
    slip_events = np.zeros(N_LEGS, dtype=int)
    airborne_time = np.zeros(N_LEGS)
    for _ in range(n_steps):
        t = state.t
        cyc = ctl.control_cycle(state, imu, config.dt)
        prev_modes = [c.mode for c in state.contacts]
        try:
            state, imu = sim.step(state, cyc.forces, config.dt)
        except SimulationFault as exc:
            status, reason, fault_time = INSTABILITY, str(exc), exc.state.t
            rows.append(_row(t, cyc, exc.state, exc.state.contacts, mu))
            break
        for i, c in enumerate(state.contacts):
            if c.mode == SLIP and prev_modes[i] != SLIP:
                slip_events[i] += 1
        rows.append(_row(t, cyc, state, state.contacts, mu))
        up = np.array([c.mode == AIRBORNE for c in state.contacts])
        airborne_time = np.where(up, airborne_time + config.dt, 0.0)
        reason = _verdict(state, z0, cyc, airborne_time)
        if reason is not None:
            status, fault_time = INSTABILITY, state.t
            break

    meta = {
        "schema": str(SCHEMA_VERSION),
        "scenario": config.name,
        "seed": str(config.seed),
        "dt": repr(float(config.dt)),
        "layer1": str(config.layer1).lower(),
        "layer2": str(config.layer2).lower(),
        "status": status,
        "fault_time": "" if fault_time is None else f"{fault_time:.6f}",
        "reason": "" if reason is None else reason.replace("\n", " "),
    }
    tlog = TelemetryLog(list(COLUMNS), np.array(rows), meta)
    summary = summarize(config, tlog, status, reason, fault_time, slip_events, z0)
    summary["final_weight_diagonal"] = [float(x) for x in ctl.weights.w]
    return RunResult(config, tlog, status, reason, fault_time, summary)


def summarize(config, tlog, status, reason, fault_time, slip_events, z0) -> dict:
    w = tlog.legs("w")
    last = -1
    return {
        "schema": SCHEMA_VERSION,
        "scenario": config.name,
        "seed": config.seed,
        "layer1": config.layer1,
        "layer2": config.layer2,
        "status": status,
        "reason": reason,
        "fault_time": fault_time,
        "steps": len(tlog),
        "simulated_time": float(tlog.col("t")[last] + config.dt) if len(tlog) else 0.0,
        "final_errors": {
            "e_p": float(tlog.col("e_p_norm")[last]),
            "e_o": float(tlog.col("e_o_norm")[last]),
            "e_v": float(tlog.col("e_v_norm")[last]),
        },
        "final_beta": float(tlog.col("beta")[last]),
        "min_beta": float(tlog.col("beta").min()),
        "final_weights": [float(x) for x in w[last]],
        "max_weights": [float(x) for x in w.max(axis=0)],
        "slip_events": [int(x) for x in slip_events],
        "total_slip_events": int(slip_events.sum()),
        "initial_com_height": z0,
        "min_com_height": float(tlog.col("p_z").min()),
    }


def write_outputs(result: RunResult, out_dir) -> RunResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(result.config)
    result.csv_path = result.log.to_csv(out / f"{stem}.csv")
    result.json_path = out / f"{stem}.json"
    result.json_path.write_text(json.dumps(result.summary, indent=2, sort_keys=True) + "\n")
    return result


def _stem(config: ScenarioConfig) -> str:
    stem = f"{config.name}_seed{config.seed}"
    if not config.layer1:
        stem += "_nol1"
    if not config.layer2:
        stem += "_nol2"
    return stem


def run_scenario(config: ScenarioConfig, out_dir: str | os.PathLike | None = None, write: bool = True) -> RunResult:
    """Run a scenario and, when ``write`` is set, store CSV telemetry and a JSON summary."""
    config.validate()
    result = simulate(config)
    if result.status == INSTABILITY:
        log.info("%s: instability at t=%.3f s (%s)", config.name, result.fault_time, result.reason)
    if write:
        write_outputs(result, config.resolve_output_dir(out_dir))
    return result


@dataclass
class RunDigest:
    name: str
    status: str
    fault_time: float | None
    final_e_p: float
    max_e_p: float
    max_e_o: float
    com_ratio: float
    final_beta: float
    max_weight: float


@dataclass
class ComparisonReport:
    t: np.ndarray
    e_p: np.ndarray  # (n, 2)
    e_o: np.ndarray  # (n, 2)
    com_z: np.ndarray  # (n, 2)
    divergence_time: float | None
    runs: tuple

    @property
    def unstable(self) -> tuple:
        return tuple(r.status == INSTABILITY for r in self.runs)

    @property
    def com_maintained(self) -> tuple:
        return tuple(r.status == COMPLETED and r.com_ratio > COM_DROP_FRACTION for r in self.runs)

    def table(self) -> str:
        head = f"{'run':<28}{'status':<13}{'fault t':>9}{'e_p fin':>11}{'e_p max':>11}{'e_o max':>10}{'z/z0 min':>10}{'beta':>8}{'w max':>8}"
        lines = [head, "-" * len(head)]
        for r in self.runs:
            ft = "-" if r.fault_time is None else f"{r.fault_time:.3f}"
            lines.append(
                f"{r.name:<28}{r.status:<13}{ft:>9}{r.final_e_p:>11.2e}{r.max_e_p:>11.2e}"
                f"{r.max_e_o:>10.2e}{r.com_ratio:>10.3f}{r.final_beta:>8.3f}{r.max_weight:>8.1f}"
            )
        div = "none" if self.divergence_time is None else f"{self.divergence_time:.3f} s"
        lines.append(f"error traces diverge at: {div}")
        return "\n".join(lines)


def _digest(tlog: TelemetryLog, label: str) -> RunDigest:
    ft = tlog.meta.get("fault_time", "")
    z = tlog.col("p_z")
    return RunDigest(
        name=label,
        status=tlog.meta.get("status", COMPLETED),
        fault_time=float(ft) if ft else None,
        final_e_p=float(tlog.col("e_p_norm")[-1]),
        max_e_p=float(tlog.col("e_p_norm").max()),
        max_e_o=float(tlog.col("e_o_norm").max()),
        com_ratio=float(z.min() / z[0]),
        final_beta=float(tlog.col("beta")[-1]),
        max_weight=float(tlog.legs("w").max()),
    )


def compare_runs(log_a: TelemetryLog, log_b: TelemetryLog, tol: float = 1e-9) -> ComparisonReport:
    """Align two runs on their common time span and locate where their errors part."""
    if log_a.columns != log_b.columns or log_a.meta.get("schema") != log_b.meta.get("schema"):
        raise SchemaError("logs have different column schemas")
    if len(log_a) == 0 or len(log_b) == 0:
        raise SchemaError("cannot compare an empty log")
    n = min(len(log_a), len(log_b))
    ta, tb = log_a.col("t")[:n], log_b.col("t")[:n]
    if not np.allclose(ta, tb, rtol=0.0, atol=1e-9):
        raise SchemaError("logs use different time bases")

    def pair(name):
        return np.column_stack([log_a.col(name)[:n], log_b.col(name)[:n]])

    e_p, e_o = pair("e_p_norm"), pair("e_o_norm")
    gap = np.abs(e_p[:, 0] - e_p[:, 1]) + np.abs(e_o[:, 0] - e_o[:, 1])
    idx = np.flatnonzero(gap > tol)
    divergence = float(ta[idx[0]]) if idx.size else None
    if divergence is None and len(log_a) != len(log_b):
        divergence = float(ta[-1])

    def label(tlog, fallback):
        name = tlog.meta.get("scenario", fallback)
        flags = "" if tlog.meta.get("layer1", "true") == "true" else " (no adapt)"
        return name + flags

    return ComparisonReport(
        t=ta,
        e_p=e_p,
        e_o=e_o,
        com_z=pair("p_z"),
        divergence_time=divergence,
        runs=(_digest(log_a, label(log_a, "A")), _digest(log_b, label(log_b, "B"))),
    )
