"""Command-line front end.

Each subcommand starts from the parameter set of its experiment, overlays an
optional JSON config file, then overlays explicit flags. The resolved config
is echoed to stdout and written next to the results so any run can be
replayed.

Exit codes: 0 success, 1 usage or config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from dataclasses import asdict

import numpy as np

from .asrn import Asrn
from .errors import AsrnLabError, ConfigError
from .experiments import (
    ExperimentConfig,
    broken_bandit_config,
    calibrate,
    final_success_fraction,
    run_population,
    run_single_trace,
    run_variance_sweep,
    sweep_config,
    trace_config,
)
from .telemetry import atomic_write_text, detect_trap_events, steps_csv, success_csv, table_csv, upsilon_csv

USAGE_ERROR = 1
RUNTIME_ERROR = 2

DEFAULTS = {
    "broken-bandit": broken_bandit_config,
    "trace": trace_config,
    "sweep": sweep_config,
    "noise-table": broken_bandit_config,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("experiment")
    g.add_argument("--config", metavar="FILE", help="JSON config file; flags override its values")
    g.add_argument("--out", metavar="DIR", default="out", help="output directory (default: %(default)s)")
    g.add_argument("--agents", type=int)
    g.add_argument("--episodes", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--epsilon0", type=float)
    g.add_argument("--epsilon-decay", type=float)
    g.add_argument("--epsilon-schedule", choices=("multiplicative", "exponential"))
    g.add_argument("--bootstrap", choices=("max", "terminal"))
    g.add_argument("--mu-left", type=float)
    g.add_argument("--sigma-left", type=float)
    g.add_argument("--mu-right", type=float)
    g.add_argument("--sigma-right", type=float)
    g.add_argument("--noiser", choices=("off", "asrn", "uniform"))
    g.add_argument("--uniform-sigma", type=float)
    g.add_argument("--bins", type=int)
    g.add_argument("--calibration-steps", type=int)
    g.add_argument("--binning", choices=("quantile", "width"))
    g.add_argument("--pooled", action="store_true", default=None, help="one noise table shared by all agents")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, default=1, help="worker processes (results do not depend on it)")

    parser = _Parser(prog="asrnlab", description="Variance-difference bandit experiments with reward noising.")
    sub = parser.add_subparsers(dest="command", metavar="{broken-bandit,trace,sweep,noise-table}")
    sub.required = True
    sub.add_parser("broken-bandit", parents=[common], help="population run on the broken-armed bandit")
    sub.add_parser("trace", parents=[common], help="single greedy agent Q trajectory and trap events")
    sw = sub.add_parser("sweep", parents=[common], help="success counts over a (sigma_left, sigma_right) grid")
    sw.add_argument("--sigma-left-values", type=_float_list)
    sw.add_argument("--sigma-right-values", type=_float_list)
    sub.add_parser("noise-table", parents=[common], help="calibrate and dump a noise table")
    for p in sub.choices.values():
        p.__class__ = _Parser
    return parser


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Documented default < config file < flags."""
    d = DEFAULTS[args.command]().to_dict()
    d["noiser"] = {"mode": "off", "num_bins": 10, "calibration_steps": 1000, "binning": "quantile", "pooled": False,
                   "sigma": 0.1, **d["noiser"]}
    if args.config:
        try:
            with open(args.config) as fh:
                d = _merge(d, json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc

    flat = {
        "num_agents": args.agents,
        "num_episodes": args.episodes,
        "master_seed": args.seed,
    }
    d.update({k: v for k, v in flat.items() if v is not None})
    agent = {
        "alpha": args.alpha,
        "gamma": args.gamma,
        "epsilon0": args.epsilon0,
        "epsilon_decay_rate": args.epsilon_decay,
        "epsilon_schedule": args.epsilon_schedule,
        "bootstrap": args.bootstrap,
    }
    d["agent"] = {**d["agent"], **{k: v for k, v in agent.items() if v is not None}}
    noiser = {
        "mode": args.noiser,
        "sigma": args.uniform_sigma,
        "num_bins": args.bins,
        "calibration_steps": args.calibration_steps,
        "binning": args.binning,
        "pooled": args.pooled,
    }
    d["noiser"] = {**d["noiser"], **{k: v for k, v in noiser.items() if v is not None}}
    if args.command == "noise-table":
        d["noiser"]["mode"] = "asrn"
    arms = [dict(a) for a in d["arms"]]
    for idx, side in ((0, "left"), (1, "right")):
        for key, attr in (("mean", f"mu_{side}"), ("std", f"sigma_{side}")):
            v = getattr(args, attr)
            if v is not None:
                arms[idx][key] = v
    d["arms"] = arms
    if args.command == "sweep":
        sweep = dict(d.get("sweep") or {})
        if args.sigma_left_values is not None:
            sweep["sigma_left_values"] = args.sigma_left_values
        if args.sigma_right_values is not None:
            sweep["sigma_right_values"] = args.sigma_right_values
        d["sweep"] = sweep
    else:
        d.pop("sweep", None)
    return ExperimentConfig.from_dict(d)


def _prepare_out(path: str) -> None:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")


def _write(out: str, name: str, text: str, written: list) -> None:
    atomic_write_text(os.path.join(out, name), text)
    written.append(name)


def _trap_counts(log) -> dict:
    counts = Counter()
    for i in range(log.num_agents):
        counts.update(kind for _, kind in detect_trap_events(log.q_values[i]))
    return {"enter": counts["enter"], "exit": counts["exit"]}


def _cmd_population(config, args, out, written) -> dict:
    result = run_population(config, threads=args.threads)
    log = result.log
    _write(out, "steps.csv", steps_csv(log), written)
    _write(out, "success.csv", success_csv(log), written)
    _write(out, "upsilon.csv", upsilon_csv(log), written)
    summary = {"final_success_fraction": final_success_fraction(log), "trap_events": _trap_counts(log)}
    if result.noise_tables:
        tables = {str(a): t.to_dict() for a, t in sorted(result.noise_tables.items())}
        _write(out, "noise_tables.json", json.dumps(tables, indent=2), written)
        summary["noise_tables"] = tables
    return summary


def _cmd_trace(config, args, out, written) -> dict:
    trace = run_single_trace(config)
    _write(out, "steps.csv", steps_csv(trace.log), written)
    episodes, kinds = zip(*trace.events) if trace.events else ((), ())
    _write(out, "events.csv", table_csv(("episode", "kind"), (episodes, kinds)), written)
    return {
        "final_success_fraction": final_success_fraction(trace.log),
        "trap_events": {"enter": kinds.count("enter"), "exit": kinds.count("exit")},
        "events": [list(e) for e in trace.events],
    }


def _cmd_sweep(config, args, out, written) -> dict:
    cells = run_variance_sweep(config, threads=args.threads)
    cols = list(zip(*[(c.sigma_left, c.sigma_right, c.num_success, c.num_agents) for c in cells]))
    _write(out, "sweep.csv", table_csv(("sigma_left", "sigma_right", "num_success", "num_agents"), cols), written)
    return {"cells": len(cells), "total_success": int(sum(c.num_success for c in cells))}


def bin_summary(table) -> str:
    lines = [f"bins: {table.num_bins}  s_max: {table.s_max:.6g}", "bin  upsilon_range                count  S_b        N_b"]
    bounds = [-np.inf, *table.edges, np.inf]
    counts = table.bin_count or (0,) * table.num_bins
    for b in range(table.num_bins):
        rng = f"[{bounds[b]:.4g}, {bounds[b + 1]:.4g})"
        lines.append(f"{b:<4d} {rng:<28s} {counts[b]:<6d} {table.bin_std[b]:<10.5g} {table.bin_noise[b]:.5g}")
    return "\n".join(lines) + "\n"


def _cmd_noise_table(config, args, out, written) -> dict:
    table = calibrate(config)
    _write(out, "noise_table.json", table.dumps(), written)
    _write(out, "noise_table.txt", bin_summary(table), written)
    return {"noise_table": table.to_dict()}


COMMANDS = {
    "broken-bandit": _cmd_population,
    "trace": _cmd_trace,
    "sweep": _cmd_sweep,
    "noise-table": _cmd_noise_table,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return USAGE_ERROR
    except AsrnLabError as exc:
        print(f"asrnlab: config error: {exc}", file=sys.stderr)
        return USAGE_ERROR

    resolved = config.to_dict()
    print(json.dumps(resolved, indent=2))
    written: list[str] = []
    try:
        _prepare_out(args.out)
        _write(args.out, "config.json", json.dumps(resolved, indent=2), written)
        summary = COMMANDS[args.command](config, args, args.out, written)
        summary = {"command": args.command, "config": resolved, **summary, "files": written + ["summary.json"]}
        _write(args.out, "summary.json", json.dumps(summary, indent=2), written)
    except AsrnLabError as exc:
        print(f"asrnlab: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"asrnlab: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
