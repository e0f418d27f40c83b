"""Command line entry point: ``optsensor {simulate,train,optimize,run,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import (BUILTIN_NAMES, ExperimentError, builtin_experiment, load_config,
                          run_experiment)


def _resolve(target: str, args):
    cfg = builtin_experiment(target) if target in BUILTIN_NAMES else load_config(target)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.alpha is not None:
        cfg = replace(cfg, alpha=args.alpha)
    if args.iters is not None:
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, max_outer_iters=args.iters))
    out = args.out or cfg.output_dir or f"results/{cfg.name}"
    return cfg, Path(out)


def _print_summary(summary: dict):
    width = max(len(k) for k in summary)
    for key in sorted(summary):
        print(f"{key:<{width}}  {summary[key]}")


def cmd_simulate(args):
    cfg, out = _resolve(args.config, args)
    traj = run_experiment(cfg, out, stop_after="simulate")["trajectory"]
    print(f"simulated {traj.K} steps on {traj.grid.c} points -> {out / 'trajectory.npz'}")


def cmd_train(args):
    cfg, out = _resolve(args.config, args)
    res = run_experiment(cfg, out, stop_after="train")
    print(f"final training loss {res['loss_history'][-1]:.3e} -> {out / 'model.npz'}")


def cmd_optimize(args):
    cfg, out = _resolve(args.config, args)
    res = run_experiment(cfg, out)
    s = res.summary()
    print(f"J: {s['J_initial']:.6g} -> {s['J_final']:.6g} (all sensors: {s['J_all_ones']:.6g}); "
          f"coverage {s['coverage']:.3f}; trace in {out / 'cost_trace.csv'}")


def cmd_run(args):
    cfg, out = _resolve(args.config, args)
    res = run_experiment(cfg, out)
    _print_summary(res.summary())
    print(f"results written to {out}")


def cmd_report(args):
    manifest = Path(args.result_dir) / "manifest.json"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest.json in {args.result_dir}")
    _print_summary(json.loads(manifest.read_text()))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optsensor", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override every RNG seed in the config")
    common.add_argument("--out", help="output directory (default results/<name>)")
    common.add_argument("--alpha", type=float, help="override the per-sensor cost")
    common.add_argument("--iters", type=int, help="override the optimizer iteration limit")

    for name, func, helptext in [
        ("simulate", cmd_simulate, "simulate the PDE and store the trajectory"),
        ("train", cmd_train, "simulate and train the one-step predictor"),
        ("optimize", cmd_optimize, "simulate, train and optimize the sensor layout"),
        ("run", cmd_run, "full pipeline plus CSV export"),
    ]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("config", help=f"config JSON file or one of: {', '.join(BUILTIN_NAMES)}")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="print the summary of a finished run")
    p.add_argument("result_dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except ExperimentError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error [input]: {exc}", file=sys.stderr)
        return 1
    return 0
