"""Command line entry point: run, compare, plot, accept."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import OUTPUT_ENV, ConfigError, bundled_dir, bundled_names, load_config

log = logging.getLogger("slipquad")


def _resolve_config(arg: str):
    path = Path(arg)
    if not path.exists():
        bundled = bundled_dir() / f"{arg}.cfg"
        if not bundled.exists():
            raise ConfigError(f"no config file {arg!r} and no bundled scenario of that name; bundled: {bundled_names()}")
        path = bundled
    return load_config(path)


def cmd_run(args) -> int:
    from .harness import run_scenario
    from .plots import emit_plots

    cfg = _resolve_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.no_layer1:
        overrides["layer1"] = False
    if args.no_layer2:
        overrides["layer2"] = False
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    res = run_scenario(cfg, out_dir=args.out)
    S = res.summary
    print(f"{cfg.name}: {res.status}" + ("" if res.stable else f" at t={res.fault_time:.3f}s ({res.reason})"))
    print(
        f"  final |e_p| {S['final_errors']['e_p']:.3e} m, |e_o| {S['final_errors']['e_o']:.3e} rad, "
        f"beta {S['final_beta']:.3f}, max w {[round(w, 2) for w in S['max_weights']]}, "
        f"slip events {S['slip_events']}"
    )
    print(f"  telemetry {res.csv_path}\n  summary   {res.json_path}")
    if args.plots:
        for p in emit_plots(res.log, res.csv_path.parent, res.csv_path.stem):
            print(f"  plot      {p}")
    return 0


def cmd_compare(args) -> int:
    from .harness import TelemetryLog, compare_runs

    report = compare_runs(TelemetryLog.from_csv(args.log_a), TelemetryLog.from_csv(args.log_b), tol=args.tol)
    print(report.table())
    return 0


def cmd_plot(args) -> int:
    from .harness import TelemetryLog
    from .plots import emit_plots

    src = Path(args.log)
    out = Path(args.out) if args.out else src.parent
    paths = emit_plots(TelemetryLog.from_csv(src), out, src.stem)
    for p in paths:
        print(p)
    return 0


def cmd_accept(args) -> int:
    from .acceptance import run_all

    results = run_all(args.only or None, echo=print)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed {failed}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slipquad", description="Slip-aware quadruped force control simulations.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config (path or bundled name)")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help=f"output directory (default: config, then ${OUTPUT_ENV}, then ./runs)")
    run.add_argument("--no-layer1", action="store_true", help="disable weight adaptation")
    run.add_argument("--no-layer2", action="store_true", help="disable time scaling")
    run.add_argument("--plots", action="store_true", help="also write SVG plots next to the telemetry")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="compare two telemetry logs")
    cmp_.add_argument("log_a")
    cmp_.add_argument("log_b")
    cmp_.add_argument("--tol", type=float, default=1e-9, help="error gap that counts as divergence")
    cmp_.set_defaults(func=cmd_compare)

    plot = sub.add_parser("plot", help="render SVG plots from a telemetry log")
    plot.add_argument("log")
    plot.add_argument("--out", default=None, help="output directory (default: next to the log)")
    plot.set_defaults(func=cmd_plot)

    acc = sub.add_parser("accept", help="run the acceptance suite")
    acc.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    acc.set_defaults(func=cmd_accept)

    sub.add_parser("list", help="list bundled scenarios").set_defaults(
        func=lambda args: print("\n".join(bundled_names())) or 0
    )
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
