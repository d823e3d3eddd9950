"""Slip-aware force distribution and time scaling for quadruped trunk control."""

from .config import ScenarioConfig, load_bundled, load_config, parse_config
from .controller import AdaptiveController, ControllerGains, distribute_forces
from .estimator import EstimatorConfig, SlipEstimator
from .harness import TelemetryLog, compare_runs, run_scenario, simulate
from .model import RobotParams
from .sim import SimConfig, Simulator

__version__ = "0.1.0"

__all__ = [
    "AdaptiveController",
    "ControllerGains",
    "EstimatorConfig",
    "RobotParams",
    "ScenarioConfig",
    "SimConfig",
    "Simulator",
    "SlipEstimator",
    "TelemetryLog",
    "compare_runs",
    "distribute_forces",
    "load_bundled",
    "load_config",
    "parse_config",
    "run_scenario",
    "simulate",
]
