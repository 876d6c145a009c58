"""Command-line experiment runner.

Subcommands:
  run      execute one configured experiment and write its metrics CSV
  compare  merge metric CSVs from runs sharing a step grid
  oracle   print the exact risk-sensitive cost of a checkpointed policy
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .harness import (
    AlignmentError,
    ConfigError,
    NumericalBlowupError,
    compare_runs,
    load_config,
    oracle_score,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskac",
                                     description="risk-sensitive actor-critic benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("--config", required=True, help="flat key = value config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="override the metrics output path")

    p_cmp = sub.add_parser("compare", help="merge metric CSVs on a shared step grid")
    p_cmp.add_argument("--out", required=True, help="merged CSV output path")
    p_cmp.add_argument("files", nargs="+", help="metric CSV files to merge")

    p_orc = sub.add_parser("oracle", help="print log(lambda) for a checkpointed policy")
    p_orc.add_argument("--config", required=True, help="config describing the model")
    p_orc.add_argument("--theta", required=True, help="checkpoint .npz containing theta")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            result = run_experiment(config, out_path=args.out, seed=args.seed)
            print(f"wrote {result.path}")
            return 0
        if args.command == "compare":
            compare_runs(args.files, args.out)
            print(f"wrote {args.out}")
            return 0
        if args.command == "oracle":
            config = load_config(args.config)
            with np.load(args.theta) as z:
                theta = z["theta"].copy()
            print(repr(oracle_score(config, theta)))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalBlowupError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    except AlignmentError as exc:
        print(f"alignment error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
