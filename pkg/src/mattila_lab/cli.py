"""Command line entry point: one subcommand per experiment."""

from __future__ import annotations

import argparse
import json
import sys

from threadpoolctl import threadpool_limits

from .common import CapacityError
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, run, validate


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="root seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="BLAS thread cap (default 1)")
    p = argparse.ArgumentParser(prog="mattila-lab", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
            if cfg.experiment != args.command:
                raise ConfigError(f"{args.config}:1: experiment: config is for "
                                  f"{cfg.experiment!r}, not {args.command!r}")
        else:
            cfg = ExperimentConfig(args.command)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out:
            cfg.output = args.out
        validate(cfg)
        if args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
        with threadpool_limits(args.threads):
            summary = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
