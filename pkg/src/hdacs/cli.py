"""Command-line front end.

Subcommands: ``run`` (one experiment), ``sweep`` (comparison tables),
``oracle`` (closed forms vs direct summation), ``plot`` (render tables).
Exit codes: 0 success, 1 validation error, 2 runtime or tolerance failure.
Set HDACS_LOG=INFO (or DEBUG) for progress logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import experiment, plotting
from .deployment import ConfigError, DeploymentError


def _setup_logging():
    level = os.environ.get("HDACS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load(args):
    if args.config:
        cfg = experiment.load_config(args.config)
    else:
        cfg = experiment.ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "frame_mode", False):
        overrides["frame_mode"] = True
    if getattr(args, "strict_hcs", False):
        overrides["strict_hcs"] = True
    return replace(cfg, **overrides) if overrides else cfg


def _cmd_run(args):
    cfg = _load(args)
    manifest = experiment.run_experiment(cfg, args.out)
    print(f"run complete: {len(manifest['outputs'])} files in {args.out}")
    return 0


def _cmd_sweep(args):
    cfg = _load(args)
    manifest = experiment.sweep_experiment(cfg, args.out)
    print(f"sweep complete: {len(manifest['outputs'])} tables in {args.out}")
    return 0


def _cmd_oracle(args):
    text, ok = experiment.oracle_report(args.factor, args.levels)
    print(text, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "oracle.txt"), "w") as fh:
            fh.write(text)
    return 0 if ok else 2


def _cmd_plot(args):
    produced = plotting.plot_tables(args.tables, args.out)
    print(f"plotted {len(produced)} figures into {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hdacs",
        description="Hierarchical compressive-sensing aggregation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the configured protocols once")
    run.add_argument("--config", help="key = value config file")
    run.add_argument("--seed", type=int, help="master seed override")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--frame-mode", action="store_true", dest="frame_mode",
                     help="charge energy per link-layer frame")
    run.add_argument("--strict-hcs", action="store_true", dest="strict_hcs",
                     help="hybrid baseline stays raw below the global threshold")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="produce the comparison tables")
    sweep.add_argument("--config", help="key = value config file")
    sweep.add_argument("--seed", type=int, help="master seed override")
    sweep.add_argument("--out", default="sweep", help="output directory")
    sweep.set_defaults(func=_cmd_sweep)

    oracle = sub.add_parser("oracle", help="closed forms vs direct summation")
    oracle.add_argument("--factor", type=int, default=4, help="cluster factor (power of 4)")
    oracle.add_argument("--levels", type=int, default=5, help="hierarchy depth")
    oracle.add_argument("--out", help="also write oracle.txt here")
    oracle.set_defaults(func=_cmd_oracle)

    plot = sub.add_parser("plot", help="render sweep tables as SVG")
    plot.add_argument("--tables", required=True, help="directory of sweep tables")
    plot.add_argument("--out", default="figures", help="output directory")
    plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, plotting.PlotError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DeploymentError, RuntimeError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
