"""Command-line interface: run scenario sweeps, validate configs, print version."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .mac import ConfigError
from .metrics import emit
from .scenario import parse_config, run_sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nomagrant",
        description="Power-domain NOMA uplink grant allocation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario sweep and emit metrics")
    run_p.add_argument("config", help="scenario YAML file")
    run_p.add_argument("--out", default=".", help="output directory (default: .)")
    run_p.add_argument("--format", choices=("csv", "jsonl"), default="csv",
                       help="metrics file format (default: csv)")
    run_p.add_argument("--log-events", action="store_true",
                       help="write one JSON-lines event log per run")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="concurrent runs (default: 1)")
    run_p.add_argument("--check-invariants", action="store_true",
                       help="verify table invariants after every slot")

    val_p = sub.add_parser("validate", help="validate a scenario file")
    val_p.add_argument("config", help="scenario YAML file")

    sub.add_parser("version", help="print the package version")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = parse_config(args.config)
    except FileNotFoundError:
        print(f"error: no such file: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for problem in exc.errors:
            print(f"config error: {problem}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results, failures = run_sweep(scenario, jobs=args.jobs,
                                  check_invariants=args.check_invariants,
                                  collect_logs=args.log_events)
    if results:
        metrics_path = out_dir / f"metrics.{args.format}"
        emit([r.row() for r in results], args.format, metrics_path)
        print(f"wrote {metrics_path} ({len(results)} runs)")
        for result in results:
            spec = result.spec
            print(f"  {spec.run_id} density={spec.density:g} seed={spec.seed} "
                  f"deployed={result.deployed_count} "
                  f"admitted={result.metrics.admitted_count}")
        if args.log_events:
            for result in results:
                log_path = out_dir / f"events_{result.spec.run_id}.jsonl"
                with log_path.open("w", encoding="utf-8", newline="\n") as fp:
                    result.log.to_jsonl(fp)
            print(f"wrote {len(results)} event logs to {out_dir}")
    for failure in failures:
        print(f"run {failure.spec.run_id} failed: {failure.message}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = parse_config(args.config)
    except FileNotFoundError:
        print(f"error: no such file: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for problem in exc.errors:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    n_runs = len(scenario.expand())
    print(f"{args.config}: valid ({n_runs} runs: "
          f"{len(scenario.schemes)} scheme(s) x {len(scenario.densities)} "
          f"density value(s) x {scenario.replications} replication(s))")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    print(f"nomagrant {__version__}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
