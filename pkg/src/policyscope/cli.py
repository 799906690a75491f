"""Command line entry point: ``policyscope run|suite|plot|replay|bench``."""

from __future__ import annotations

import argparse
import logging
import sys

from .benchmarks import list_benchmarks
from .errors import PolicyscopeError
from .harness import load_config, replay, run_optimization, run_suite
from .plotting import emit_plots


def _overrides(args) -> dict:
    keys = ("optimizer", "benchmark", "budget", "seed", "criteria", "output_dir")
    return {k: getattr(args, k, None) for k in keys}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="policyscope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat TOML file of run settings")
        p.add_argument("--output-dir", dest="output_dir")

    run = sub.add_parser("run", help="one optimization run")
    common(run)
    run.add_argument("--optimizer")
    run.add_argument("--benchmark")
    run.add_argument("--budget", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--criteria", help="comma-separated active criteria, e.g. exploitation,diversity")

    suite = sub.add_parser("suite", help="repeated runs plus a summary table")
    common(suite)
    suite.add_argument("--reps", type=int, dest="repetitions")
    suite.add_argument("--optimizer")
    suite.add_argument("--benchmark")
    suite.add_argument("--criteria")

    plot = sub.add_parser("plot", help="plots from a results directory")
    plot.add_argument("dir")

    rep = sub.add_parser("replay", help="re-run a recorded transcript without network access")
    rep.add_argument("transcript")
    common(rep)

    bench = sub.add_parser("bench", help="benchmark registry")
    bench.add_argument("action", choices=["list"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "bench":
            for name, dim, sense in list_benchmarks():
                print(f"{name}\tdim={dim}\t{sense}")
            return 0
        if args.command == "plot":
            for path in emit_plots(args.dir):
                print(path)
            return 0
        if args.command == "run":
            res = run_optimization(load_config(args.config, **_overrides(args)))
            print(f"best y={res.best_value!r} at x={res.best_point} after {res.n_evaluations} evaluations")
            if res.csv_path:
                print(res.csv_path)
            return 0
        if args.command == "suite":
            overrides = _overrides(args)
            overrides["repetitions"] = args.repetitions
            summary = run_suite(load_config(args.config, **overrides))
            print(f"{len(summary.results)} runs succeeded, {len(summary.failures)} failed")
            if summary.summary_path:
                print(summary.summary_path)
            return 0 if summary.ok and not summary.failures else 1
        if args.command == "replay":
            cfg = load_config(args.config)
            res = replay(args.transcript, cfg, args.output_dir)
            print(f"replayed {len(res.records)} records; best y={res.best_value!r}")
            return 0
    except PolicyscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
