"""Command line entry points: run, sweep, report, bench-regret, verify."""
from __future__ import annotations

import argparse
import json
import sys

from .controller import bench_alternating_linear, bench_stationary_quadratic
from .harness.config import RunConfig
from .harness.report import collect_runs, write_report
from .harness.sweep import parse_seed_range, run_sweep
from .harness.train import train_run
from .verify import format_checks, run_checks


def _cmd_run(args) -> int:
    from pathlib import Path

    cfg = RunConfig.from_json(args.config)
    out = args.out
    if out is None:
        stem = Path(args.config).stem
        out = Path(args.config).with_name(f"{stem}_s{cfg.seed}.jsonl")
    result = train_run(cfg, out)
    if result.completed:
        print(json.dumps(result.final["metrics"], indent=1))
        print(f"log: {result.log_path}")
        return 0
    print(f"run failed: {result.failed}", file=sys.stderr)
    print(f"partial log: {result.log_path}", file=sys.stderr)
    return 1


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        sweep_cfg = json.load(fh)
    seeds = parse_seed_range(args.seeds)
    out = run_sweep(sweep_cfg, seeds, args.out)
    print(out["summary"], end="")
    return 0


def _cmd_report(args) -> int:
    print(write_report(args.in_dir, collect_runs(args.in_dir)), end="")
    return 0


def _cmd_bench_regret(args) -> int:
    print("stationary quadratic, eta_t = 1/sqrt(t):")
    for t, rate in bench_stationary_quadratic(horizon=args.horizon):
        print(f"  T={t:<7d} Regret(T)/T = {rate:.6f}")
    print("alternating linear, eta_t = 1/sqrt(t):")
    for t, rate in bench_alternating_linear(horizon=args.horizon):
        print(f"  T={t:<7d} Regret(T)/T = {rate:.6f}")
    return 0


def _cmd_verify(args) -> int:
    results = run_checks()
    print(format_checks(results), end="")
    return 0 if all(r.passed for r in results) else 1


def _cmd_bench_kernels(args) -> int:
    from .harness.bench import bench_kernels, format_bench
    print(format_bench(bench_kernels(repeats=args.repeats)), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairssl-lab",
        description="Fair semi-supervised training runs, sweeps and reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train one configuration")
    p.add_argument("--config", required=True, help="RunConfig JSON path")
    p.add_argument("--out", default=None, help="log file (default: alongside config)")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="run a method grid across seeds")
    p.add_argument("--config", required=True, help="sweep JSON with base + grid")
    p.add_argument("--seeds", required=True, help="seed list, e.g. 0..2 or 1,4,9")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("report", help="rebuild csv/summary files from run logs")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of run logs")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("bench-regret", help="print Regret(T)/T on the bench sequences")
    p.add_argument("--horizon", type=int, default=10000)
    p.set_defaults(fn=_cmd_bench_regret)

    p = sub.add_parser("verify", help="run the quick property-check suite")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("bench-kernels", help="compare numpy and compiled kernels")
    p.add_argument("--repeats", type=int, default=30)
    p.set_defaults(fn=_cmd_bench_kernels)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
