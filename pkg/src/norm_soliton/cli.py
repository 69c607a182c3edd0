"""Command line entry point: norm-soliton <subcommand> --config <file> [--override key=value]..."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import NormSolitonError, NumericError
from .scenario import TASKS, dumps, load_scenario, run

EXIT_OK, EXIT_FAILURE = 0, 1

# subcommand flag -> scenario key
_FLAGS = {
    "gn": [("--t", "options.t", float)],
    "thresholds": [("--a", "params.a", float), ("--mu", "params.mu", float),
                   ("--p", "params.p", float), ("--q", "params.q", float)],
    "evolve": [("--init", "options.init", str), ("--rho", "options.rho", float),
               ("--T", "options.T", float), ("--dt", "options.dt", float),
               ("--scheme", "options.scheme", str)],
    "sweep": [("--vary", "options.vary", str)],
}
_CHOICES = {"--scheme": ["strang", "cn"], "--vary": ["mu", "q", "a"]}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="norm-soliton",
                                     description="Normalized Schrodinger-Poisson standing waves.")
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        sp = sub.add_parser(task)
        sp.add_argument("--config", help="scenario JSON document")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted key override, e.g. grid.n=1024 (repeatable)")
        sp.add_argument("--output-dir", help="output root (else the scenario or NORM_SOLITON_OUTPUT)")
        for flag, key, typ in _FLAGS.get(task, []):
            sp.add_argument(flag, dest=key, type=typ, choices=_CHOICES.get(flag))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.override)
    for _, key, _ in _FLAGS.get(args.task, []):
        value = getattr(args, key)
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            doc = load_scenario(args.task, args.config, overrides)
            if args.output_dir:
                doc["output_dir"] = args.output_dir
            out, result = run(doc)
    except NormSolitonError as ex:
        sys.stderr.write(dumps(ex.to_dict()))
        return ex.exit_code
    except FloatingPointError as ex:
        err = NumericError(str(ex))
        sys.stderr.write(dumps(err.to_dict()))
        return err.exit_code
    sys.stdout.write(dumps({"output": str(out), "report": result.report}))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
