"""Scenario configuration: INI files read with configparser.

Vectors are comma-separated floats. Unknown sections or keys are rejected so
that a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controller import ControllerGains
from .estimator import EstimatorConfig
from .model import N_LEGS, RobotParams
from .sim import SimConfig

OUTPUT_ENV = "SLIPQUAD_OUT"
TRAJECTORY_KINDS = ("point_to_point", "ellipse")

_SCHEMA = {
    "scenario": {"name", "duration", "dt", "seed", "layer1", "layer2", "noise", "output_dir"},
    "robot": {"mass", "inertia", "gravity", "l1", "l2", "hip_offsets", "joint_limits"},
    "terrain": {"mu_static", "kinetic_ratio", "slip_damping", "ideal_contacts"},
    "sensors": {"sigma_accel", "sigma_gyro", "foot_radius"},
    "estimator": {"window", "min_samples", "contact_threshold", "bandwidth_floor"},
    "gains": {"kp", "ko", "kv", "w0", "alpha", "slip_deadzone", "w_max"},
    "trajectory": {
        "kind", "start", "target_offset", "k_ds",
        "center", "a_x", "a_z", "f_p", "theta_a", "f_o",
    },
    "initial": {"position", "stance_center", "stance", "on_reference"},
}


class ConfigError(ValueError):
    pass


def _vec(text: str, n: int | None = None) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.replace("\n", ",").split(",") if x.strip()])
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc
    if n is not None and v.size != n:
        raise ConfigError(f"expected {n} values, got {v.size} in {text!r}")
    return v


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, int, np.floating, np.integer)):
        return repr(float(v)) if isinstance(v, (float, np.floating)) else str(int(v))
    return ", ".join(repr(float(x)) for x in np.asarray(v, dtype=float).ravel())


@dataclass
class TrajectorySpec:
    kind: str = "ellipse"
    # point-to-point
    start: np.ndarray = field(default_factory=lambda: np.array([-0.023, 0.0063, 0.355]))
    target_offset: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.05, -0.005]))
    k_ds: float = 1.0
    # ellipse
    center: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.356]))
    a_x: float = 0.04
    a_z: float = 0.02
    f_p: float = 0.7
    theta_a: float = 0.1
    f_o: float = 0.2

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ConfigError(f"trajectory kind must be one of {TRAJECTORY_KINDS}")
        if self.k_ds <= 0.0:
            raise ConfigError("k_ds must be positive")
        if min(self.f_p, self.f_o) < 0.0:
            raise ConfigError("frequencies must be non-negative")

    def build(self):
        from .trajectory import Ellipse, PointToPoint

        if self.kind == "point_to_point":
            return PointToPoint(self.start, self.start + self.target_offset, self.k_ds)
        return Ellipse(self.center, self.a_x, self.a_z, self.f_p, self.theta_a, self.f_o)


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    duration: float = 5.0
    dt: float = 0.002
    seed: int = 0
    layer1: bool = True
    layer2: bool = True
    noise: bool = True
    output_dir: str | None = None
    params: RobotParams = field(default_factory=RobotParams)
    sim: SimConfig = field(default_factory=SimConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    gains: ControllerGains = field(default_factory=ControllerGains)
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    # CoM start; None means the first trajectory sample
    position: np.ndarray | None = None
    # xy point the stance is centred on; None means the CoM start
    stance_center: np.ndarray | None = None
    # half length (x) and half width (y) of the rectangular stance
    stance: np.ndarray = field(default_factory=lambda: np.array([0.19, 0.12]))
    # start with the reference velocity instead of at rest
    on_reference: bool = False

    def __post_init__(self):
        # the scenario-level toggle owns the simulator noise switch
        self.sim = replace(self.sim, noise=bool(self.noise))
        self.validate()

    def validate(self) -> None:
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        mu = np.asarray(self.sim.mu_static, dtype=float)
        if mu.size != N_LEGS or np.any(mu <= 0.0):
            raise ConfigError("mu_static needs four positive values")
        if not 0.0 < self.sim.kinetic_ratio <= 1.0:
            raise ConfigError("kinetic_ratio must lie in (0, 1]")
        if self.sim.slip_damping <= 0.0:
            raise ConfigError("slip_damping must be positive")

    @property
    def mu_kinetic(self) -> np.ndarray:
        return self.sim.kinetic_ratio * np.asarray(self.sim.mu_static, dtype=float)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)

    def resolve_output_dir(self, explicit: str | os.PathLike | None = None) -> Path:
        out = explicit or self.output_dir or os.environ.get(OUTPUT_ENV) or "runs"
        return Path(out)

    def to_ini(self) -> str:
        p, s, e, g, t = self.params, self.sim, self.estimator, self.gains, self.trajectory
        cp = configparser.ConfigParser()
        cp["scenario"] = {
            "name": self.name, "duration": _fmt(self.duration), "dt": _fmt(self.dt),
            "seed": str(self.seed), "layer1": _fmt(self.layer1), "layer2": _fmt(self.layer2),
            "noise": _fmt(self.noise),
        }
        if self.output_dir:
            cp["scenario"]["output_dir"] = self.output_dir
        cp["robot"] = {
            "mass": _fmt(p.mass), "inertia": _fmt(p.inertia), "gravity": _fmt(p.gravity),
            "l1": _fmt(p.l1), "l2": _fmt(p.l2), "hip_offsets": _fmt(p.hip_offsets),
            "joint_limits": _fmt(p.joint_limits),
        }
        cp["terrain"] = {
            "mu_static": _fmt(s.mu_static), "kinetic_ratio": _fmt(s.kinetic_ratio),
            "slip_damping": _fmt(s.slip_damping), "ideal_contacts": _fmt(s.ideal_contacts),
        }
        cp["sensors"] = {
            "sigma_accel": _fmt(s.sigma_accel), "sigma_gyro": _fmt(s.sigma_gyro),
            "foot_radius": _fmt(s.foot_radius),
        }
        cp["estimator"] = {
            "window": str(e.window), "min_samples": str(e.min_samples),
            "contact_threshold": _fmt(e.contact_threshold), "bandwidth_floor": _fmt(e.bandwidth_floor),
        }
        cp["gains"] = {
            "kp": _fmt(g.kp), "ko": _fmt(g.ko), "kv": _fmt(np.diag(g.Kv)), "w0": _fmt(g.w0),
            "alpha": _fmt(g.alpha), "slip_deadzone": _fmt(g.slip_deadzone),
        }
        if g.w_max is not None:
            cp["gains"]["w_max"] = _fmt(g.w_max)
        cp["trajectory"] = {"kind": t.kind}
        if t.kind == "point_to_point":
            cp["trajectory"].update(
                start=_fmt(t.start), target_offset=_fmt(t.target_offset), k_ds=_fmt(t.k_ds)
            )
        else:
            cp["trajectory"].update(
                center=_fmt(t.center), a_x=_fmt(t.a_x), a_z=_fmt(t.a_z), f_p=_fmt(t.f_p),
                theta_a=_fmt(t.theta_a), f_o=_fmt(t.f_o),
            )
        cp["initial"] = {"stance": _fmt(self.stance), "on_reference": _fmt(self.on_reference)}
        if self.position is not None:
            cp["initial"]["position"] = _fmt(self.position)
        if self.stance_center is not None:
            cp["initial"]["stance_center"] = _fmt(self.stance_center)
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in cp[sec].items())
            lines.append("")
        return "\n".join(lines)


def _check_schema(cp: configparser.ConfigParser) -> None:
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        extra = set(cp[sec].keys()) - _SCHEMA[sec]
        if extra:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    _check_schema(cp)

    def sec(name):
        return cp[name] if cp.has_section(name) else {}

    def get(section, key, conv, default):
        s = sec(section)
        if key not in s:
            return default
        raw = s[key]
        try:
            if conv is bool:
                return cp.getboolean(section, key)
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    d_params = RobotParams()
    params = RobotParams(
        mass=get("robot", "mass", float, d_params.mass),
        inertia=get("robot", "inertia", lambda x: _vec(x, 9).reshape(3, 3), d_params.inertia),
        gravity=get("robot", "gravity", float, d_params.gravity),
        l1=get("robot", "l1", float, d_params.l1),
        l2=get("robot", "l2", float, d_params.l2),
        hip_offsets=get("robot", "hip_offsets", lambda x: _vec(x, 12).reshape(4, 3), d_params.hip_offsets),
        joint_limits=get("robot", "joint_limits", lambda x: _vec(x, 6).reshape(3, 2), d_params.joint_limits),
    )

    noise = get("scenario", "noise", bool, True)
    d_sim = SimConfig()
    sim = SimConfig(
        mu_static=tuple(get("terrain", "mu_static", lambda x: _vec(x, 4), np.array(d_sim.mu_static))),
        kinetic_ratio=get("terrain", "kinetic_ratio", float, d_sim.kinetic_ratio),
        slip_damping=get("terrain", "slip_damping", float, d_sim.slip_damping),
        ideal_contacts=get("terrain", "ideal_contacts", bool, d_sim.ideal_contacts),
        foot_radius=get("sensors", "foot_radius", float, d_sim.foot_radius),
        sigma_accel=get("sensors", "sigma_accel", float, d_sim.sigma_accel),
        sigma_gyro=get("sensors", "sigma_gyro", float, d_sim.sigma_gyro),
        noise=noise,
    )

    d_est = EstimatorConfig()
    try:
        est = EstimatorConfig(
            window=get("estimator", "window", int, d_est.window),
            min_samples=get("estimator", "min_samples", int, d_est.min_samples),
            contact_threshold=get("estimator", "contact_threshold", float, d_est.contact_threshold),
            bandwidth_floor=get("estimator", "bandwidth_floor", float, d_est.bandwidth_floor),
            sigma_accel=sim.sigma_accel,
            sigma_gyro=sim.sigma_gyro,
            gravity=params.gravity,
        )
        d_g = ControllerGains()
        gains = ControllerGains(
            kp=get("gains", "kp", float, d_g.kp),
            ko=get("gains", "ko", float, d_g.ko),
            Kv=get("gains", "kv", lambda x: _vec(x, 6), np.diag(d_g.Kv)),
            w0=get("gains", "w0", float, d_g.w0),
            alpha=get("gains", "alpha", float, d_g.alpha),
            slip_deadzone=get("gains", "slip_deadzone", float, d_g.slip_deadzone),
            w_max=get("gains", "w_max", float, None),
        )
        d_t = TrajectorySpec()
        traj = TrajectorySpec(
            kind=get("trajectory", "kind", str.strip, d_t.kind),
            start=get("trajectory", "start", lambda x: _vec(x, 3), d_t.start),
            target_offset=get("trajectory", "target_offset", lambda x: _vec(x, 3), d_t.target_offset),
            k_ds=get("trajectory", "k_ds", float, d_t.k_ds),
            center=get("trajectory", "center", lambda x: _vec(x, 3), d_t.center),
            a_x=get("trajectory", "a_x", float, d_t.a_x),
            a_z=get("trajectory", "a_z", float, d_t.a_z),
            f_p=get("trajectory", "f_p", float, d_t.f_p),
            theta_a=get("trajectory", "theta_a", float, d_t.theta_a),
            f_o=get("trajectory", "f_o", float, d_t.f_o),
        )
        return ScenarioConfig(
            name=get("scenario", "name", str.strip, Path(source).stem),
            duration=get("scenario", "duration", float, 5.0),
            dt=get("scenario", "dt", float, 0.002),
            seed=get("scenario", "seed", int, 0),
            layer1=get("scenario", "layer1", bool, True),
            layer2=get("scenario", "layer2", bool, True),
            noise=noise,
            output_dir=get("scenario", "output_dir", str.strip, None),
            params=params,
            sim=sim,
            estimator=est,
            gains=gains,
            trajectory=traj,
            position=get("initial", "position", lambda x: _vec(x, 3), None),
            stance_center=get("initial", "stance_center", lambda x: _vec(x, 2), None),
            stance=get("initial", "stance", lambda x: _vec(x, 2), np.array([0.19, 0.12])),
            on_reference=get("initial", "on_reference", bool, False),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


def bundled_dir() -> Path:
    return Path(__file__).parent / "scenarios"


def bundled_names() -> list[str]:
    return sorted(p.stem for p in bundled_dir().glob("*.cfg"))


def load_bundled(name: str) -> ScenarioConfig:
    path = bundled_dir() / f"{name}.cfg"
    if not path.exists():
        raise ConfigError(f"no bundled scenario {name!r}; have {bundled_names()}")
    return load_config(path)
