"""SVG figures from telemetry logs."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import TelemetryLog  # noqa: E402
from .model import N_LEGS  # noqa: E402

log = logging.getLogger(__name__)

# fixed hash salt and no date stamp keep the SVG output byte-identical across runs
_RC = {"svg.hashsalt": "slipquad", "svg.fonttype": "path", "figure.figsize": (7.0, 6.0)}
_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_tracking(tlog: TelemetryLog, path: Path) -> Path:
    t = tlog.col("t")
    fig, axes = plt.subplots(3, 1, sharex=True)
    for ax, a in zip(axes, "xyz"):
        ax.plot(t, tlog.col(f"p_{a}"), label=f"p_{a}")
        ax.plot(t, tlog.col(f"pd_{a}"), "--", label=f"p_d,{a}")
        ax.set_ylabel(f"{a} [m]")
        ax.legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("t [s]")
    axes[0].set_title("CoM position and reference")
    return _save(fig, path)


def plot_errors(tlog: TelemetryLog, path: Path) -> Path:
    t = tlog.col("t")
    fig, axes = plt.subplots(3, 1, sharex=True)
    for ax, name, unit in zip(axes, ("e_p_norm", "e_o_norm", "e_v_norm"), ("m", "rad", "-")):
        ax.plot(t, tlog.col(name))
        ax.set_ylabel(f"|{name[:3]}| [{unit}]")
    axes[-1].set_xlabel("t [s]")
    axes[0].set_title("Tracking error norms")
    return _save(fig, path)


def plot_weights(tlog: TelemetryLog, path: Path) -> Path:
    t = tlog.col("t")
    w, ps = tlog.legs("w"), tlog.legs("slip_prob")
    fig, axes = plt.subplots(2, 1, sharex=True)
    for i in range(N_LEGS):
        axes[0].plot(t, w[:, i], label=f"w{i + 1}")
        axes[1].plot(t, ps[:, i], label=f"foot {i + 1}")
    axes[0].set_ylabel("tangential weight")
    axes[0].legend(loc="upper left", fontsize="small")
    axes[1].set_ylabel("slip probability")
    axes[1].set_ylim(-0.05, 1.05)
    axes[1].legend(loc="upper right", fontsize="small")
    axes[1].set_xlabel("t [s]")
    axes[0].set_title("Force weights and slip probabilities")
    return _save(fig, path)


def plot_beta(tlog: TelemetryLog, path: Path) -> Path:
    t = tlog.col("t")
    fig, axes = plt.subplots(2, 1, sharex=True)
    axes[0].plot(t, tlog.col("beta"))
    axes[0].set_ylabel("beta")
    axes[0].set_ylim(0.0, 1.05)
    axes[0].set_title("Time scaling")
    axes[1].plot(t, tlog.col("t_v"), label="t_v")
    axes[1].plot(t, t, ":", label="t")
    axes[1].set_ylabel("virtual time [s]")
    axes[1].set_xlabel("t [s]")
    axes[1].legend(loc="upper left", fontsize="small")
    return _save(fig, path)


PLOTS = {
    "tracking": plot_tracking,
    "errors": plot_errors,
    "weights": plot_weights,
    "beta": plot_beta,
}


def emit_plots(tlog: TelemetryLog, out_dir, stem: str = "run") -> list[Path]:
    """Write one SVG per figure. An empty log writes nothing and logs a warning."""
    if len(tlog) == 0:
        log.warning("telemetry log %s is empty, no plots written", stem)
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_RC):
        return [fn(tlog, out / f"{stem}_{name}.svg") for name, fn in PLOTS.items()]
