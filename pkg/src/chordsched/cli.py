"""Command line entry point: ``chordsched run`` and ``chordsched report``."""

from __future__ import annotations

import argparse
import sys

from .config import load_matrix
from .errors import ConfigError, InvalidArgument
from .matrix import ReportError, report, run_matrix

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chordsched",
        description="Simulate autonomic maintenance scheduling for a Chord overlay.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment matrix")
    run.add_argument("--config", required=True, metavar="PATH", help="matrix config file")
    run.add_argument("--only", action="append", metavar="CELL",
                     help="run only this cell (workload__churn__policy); repeatable")
    run.add_argument("--jobs", type=int, default=1, metavar="K", help="parallel worker processes")
    run.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    run.add_argument("--quiet", action="store_true", help="no per-run progress lines")

    rep = sub.add_parser("report", help="normalized tables and NSD data for a results directory")
    rep.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    rep.add_argument("--format", default="csv", choices=["csv"])
    return parser


def _cmd_run(args):
    matrix = load_matrix(args.config)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")

    def progress(row):
        if not args.quiet:
            print(f"{row['workload']}__{row['churn']}__{row['policy']} r{row['repeat']}: "
                  f"{row['lookups']} lookups, {row['failures']} failed, "
                  f"{row['duration']:.0f} s simulated", flush=True)

    try:
        outcome = run_matrix(matrix, args.out, only=args.only, jobs=args.jobs, progress=progress)
    except ReportError as exc:
        raise ConfigError(str(exc)) from None
    print(f"{len(outcome.runs)} runs written to {outcome.out_dir}")
    return EXIT_OK


def _cmd_report(args):
    outcome = report(args.in_dir, args.format)
    for row in outcome.table:
        if row["workload"] in ("mean", "median"):
            cols = ", ".join(f"{k}={_show(row[k])}" for k in
                             ("elt_window_norm", "elt_single_norm", "nu_window_norm", "nu_single_norm"))
            print(f"{row['workload']:>6} {row['policy']}: {cols}")
    if outcome.median_nsd is not None:
        print(f"median NSD over {len(outcome.nsd_values)} windows: {outcome.median_nsd:.4f}")
    else:
        print("no complete triples of repeats; NSD not computed")
    return EXIT_OK


def _show(v):
    return "-" if v is None else f"{v:.3f}"


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = _cmd_run if args.command == "run" else _cmd_report
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"chordsched: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("chordsched: interrupted; finished runs were summarized", file=sys.stderr)
        return EXIT_RUNTIME
    except (ReportError, InvalidArgument, OSError) as exc:
        print(f"chordsched: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
