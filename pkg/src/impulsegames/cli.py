"""Command-line entry point.

Usage: ``impulse-games CONFIG [--output-dir DIR] [--seed SEED] [-v]``

Exit codes: 0 success (including a reported non-convergent solve), 1 config
or parameter validation failure, 2 internal solver error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .experiment import load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impulse-games",
        description="Solve a two-player stochastic impulse game from a config file "
                    "and write CSV/summary artifacts.")
    parser.add_argument("config", nargs="?", help="path to the experiment config (INI)")
    parser.add_argument("--output-dir", type=Path, default=None,
                        help="override the output directory from the config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the Monte Carlo seed from the config")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for per-sweep diagnostics")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        parser.print_help(sys.stderr)
        return 1

    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        config = load_config(args.config)
        if args.output_dir is not None:
            config = dataclasses.replace(config, output_dir=args.output_dir)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        return run(config, seed_override=args.seed)
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
