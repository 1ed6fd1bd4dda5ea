"""Command line entry point ``mfrnn``.

Exit codes: 0 success, 1 config error, 2 numeric abort, 3 partial sweep.
Reported loss values are the doubled (plain MSE) form; training uses the
halved risk.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import config as config_mod
from . import experiments as ex
from .errors import ConfigError, MFRNNError, NumericError
from .trainer import TrainingAborted

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PARTIAL = 0, 1, 2, 3


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("MFRNN_JOBS", "1")))
    except ValueError:
        return 1


def _out(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.output:
        return Path(cfg.output)
    raise ConfigError("no output directory: pass --out or set 'output' in the config")


def cmd_gen_data(args):
    cfg = config_mod.load(args.config, width=args.width, data_seed=args.seed)
    out = _out(args, cfg)
    path = ex.generate_data(cfg, out)
    L = cfg.net.L
    print(f"wrote {cfg.m} sequences x {L + 1} steps (d={cfg.net.d}) to {path}")
    return EXIT_OK


def cmd_train(args):
    cfg = config_mod.load(args.config, seed=args.seed, width=args.width)
    out = _out(args, cfg)
    traj = ex.run_training(cfg, args.data or out, out, resume=args.resume)
    first, last = traj.records[0], traj.records[-1]
    print(f"trained {last[0]} steps: MSE {first[3]:.6g} -> {last[3]:.6g}, clamps={last[8]}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = config_mod.load(args.config, seed=args.seed, width=args.width)
    status = ex.run_sweep(cfg, _out(args, cfg), jobs=args.jobs)
    print(f"{len(status['runs'])} runs, {len(status['failed'])} failed")
    return EXIT_PARTIAL if status["partial"] else EXIT_OK


def cmd_couple(args):
    cfg = config_mod.load(args.config, seed=args.seed, width=args.width)
    if cfg.kind != "coupling_rate":
        raise ConfigError("couple requires a config with kind = 'coupling_rate'")
    run = ex.run_coupling(cfg, _out(args, cfg), jobs=args.jobs, data_dir=args.data)
    for n, tau, d in run.dtau_table:
        print(f"n={n:5d} tau={tau:.6g} D_tau={d:.6g}")
    print(f"slope={run.slope:.6g}")
    return EXIT_PARTIAL if run.partial else EXIT_OK


def cmd_diagnose(args):
    path = ex.run_diagnose(args.run, args.data)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_report(args):
    for p in ex.run_report(args.run):
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfrnn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help, config=True, jobs=False, data=False, run=False):
        sp = sub.add_parser(name, help=help)
        if config:
            sp.add_argument("--config", required=True)
            sp.add_argument("--out")
            sp.add_argument("--seed", type=int, help="override the student (gen-data: data) seed")
            sp.add_argument("--width", type=int, help="override net.n")
        if jobs:
            sp.add_argument("--jobs", type=int, default=_default_jobs())
        if data:
            sp.add_argument("--data", help="directory holding batch.csv")
        if run:
            sp.add_argument("--run", required=True)
        sp.set_defaults(func=func)
        return sp

    add("gen-data", cmd_gen_data, "sample and label a dataset")
    tr = add("train", cmd_train, "train one student", data=True)
    tr.add_argument("--resume", help="MFW1 snapshot of this run to continue from")
    add("sweep", cmd_sweep, "train several widths/seeds", jobs=True)
    add("couple", cmd_couple, "coupled width sweep and D_tau rate", jobs=True, data=True)
    add("diagnose", cmd_diagnose, "stationarity functionals for a run", config=False, data=True, run=True)
    add("report", cmd_report, "SVG charts and summary for a run directory", config=False, run=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrainingAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.last_snapshot:
            print(f"last snapshot: {exc.last_snapshot}", file=sys.stderr)
        return EXIT_NUMERIC if exc.numeric else EXIT_CONFIG
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MFRNNError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
