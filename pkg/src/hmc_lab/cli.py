"""``hmc-lab`` command line entry point.

Usage::

    hmc-lab <sample|couple|integrate-check|convergence> --config PATH
            [--output-dir PATH] [--overwrite] [--seed N]

The default output directory can be set with ``$HMC_LAB_OUTPUT_DIR``.
Exit status is 0 when every configured expectation holds, 1 when one fails
and 2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ConfigError, parse_config
from .experiments import OUTPUT_DIR_ENV, OutputExistsError, run_experiment


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmc-lab",
        description="Run a configured HMC experiment and write CSV results.",
        epilog=f"Default output directory: ${OUTPUT_DIR_ENV}, else "
               "./hmc_lab_runs.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="INI config file")
    parser.add_argument("--output-dir", help="overrides the config's output_dir")
    parser.add_argument("--overwrite", action="store_true", default=None,
                        help="replace existing output files")
    parser.add_argument("--seed", type=_u64, help="overrides sampler.seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    if cfg.experiment != args.experiment:
        print(f"config error: experiment.experiment is {cfg.experiment!r} "
              f"but subcommand is {args.experiment!r}", file=sys.stderr)
        return 2
    try:
        report = run_experiment(cfg, output_dir=args.output_dir,
                                overwrite=args.overwrite, seed=args.seed)
    except (OutputExistsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in report.lines():
        print(line)
    return report.status


if __name__ == "__main__":
    sys.exit(main())
