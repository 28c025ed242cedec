"""Command-line entry point.

Exit codes: 0 on success, 1 for configuration or output problems, 2 when
a runtime invariant check fails during a run.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .config import EXPERIMENTS, ConfigError, ExperimentSpec, parse_config
from .experiments import run_experiment
from .reporting import emit_results
from .simulator import InvariantViolation


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; keep that for invariants
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="benesim",
                     description="Benes fabric experiments under grouped-backpressure control")
    parser.add_argument("--config", metavar="PATH",
                        help="flat key = value config file (defaults apply when omitted)")
    parser.add_argument("--experiment", choices=EXPERIMENTS,
                        help="override the config's experiment")
    parser.add_argument("--out", metavar="DIR", default="results",
                        help="output directory (default: results)")
    parser.add_argument("--seed", type=int, metavar="N", help="override the config's seed")
    parser.add_argument("--check-invariants", action="store_true",
                        help="verify per-slot queue bounds and conservation (about 2x slower)")
    parser.add_argument("--timeseries", action="store_true",
                        help="emit per-slot tables for every run, not just adaptation")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                print(f"benesim: cannot read config: {exc}", file=sys.stderr)
                return 1
            spec = parse_config(text)
        else:
            spec = ExperimentSpec()
        if args.experiment:
            spec = replace(spec, experiment=args.experiment)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
    except ConfigError as exc:
        print(f"benesim: config error: {exc}", file=sys.stderr)
        return 1

    try:
        result = run_experiment(spec, check_invariants=args.check_invariants)
    except InvariantViolation as exc:
        print(f"benesim: invariant violation: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"benesim: config error: {exc}", file=sys.stderr)
        return 1

    try:
        paths = emit_results(result, args.out, timeseries=args.timeseries)
        if not args.no_figures:
            from . import figures
            paths.extend(figures.render_experiment(result, args.out))
    except OSError as exc:
        print(f"benesim: cannot write results: {exc}", file=sys.stderr)
        return 1

    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
