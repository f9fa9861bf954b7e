"""Command line entry point: ``das-ee {rate-sweep,rau-sweep,trace}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .harness import (
    ConfigError,
    ExperimentConfig,
    load_config,
    run_convergence_trace,
    run_rate_sweep,
    run_rau_sweep,
    summarize,
    write_csv,
    write_trace_csv,
)
from .selection import Strategy

log = logging.getLogger("das_ee")


def _strategies(text: str) -> tuple[Strategy, ...]:
    try:
        return tuple(Strategy(s.strip()) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="das-ee", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("rate-sweep", "sweep the rate floor at a fixed number of RAUs"),
        ("rau-sweep", "sweep the number of RAUs"),
        ("trace", "per-iteration convergence traces with every RAU on"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value experiment file")
        p.add_argument("--seed", type=_seed)
        p.add_argument("--out", required=True, help="CSV output path")
        p.add_argument("--draws", type=int)
        p.add_argument("--strategies", type=_strategies, help="comma list, e.g. Distance,Exhaustive")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "trace":
            p.add_argument("--problem", choices=("P1", "P2", "P3"), default="P1")
        else:
            p.add_argument("--timing", action="store_true", help="add a wall_time_s column (breaks byte reproducibility)")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.draws is not None:
        overrides["num_draws"] = args.draws
    if args.strategies:
        overrides["strategies"] = args.strategies
    return replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
        if args.command == "trace":
            points = run_convergence_trace(cfg, args.problem)
            write_trace_csv(points, args.out)
            for p in points:
                log.info("%s I=%d it=%d %.6g %s", p.problem, p.rau_count, p.iteration, p.objective, p.unit)
            return 0
        run = run_rate_sweep if args.command == "rate-sweep" else run_rau_sweep
        records = run(cfg, progress=lambda i, d: log.info("I=%d draw %d done", i, d))
        write_csv(records, args.out, include_timing=args.timing)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"das-ee: error: {exc}", file=sys.stderr)
        return 2
    for row in summarize(records):
        print(
            f"I={row['rau_count']:<3d} Rmin={row['rate_min_bps'] / 1e6:8.1f} Mbit/s {row['strategy']:<10s} "
            f"rate={row['mean_rate_bps'] / 1e6:8.2f} Mbit/s EE={row['mean_ee_bits_per_joule'] / 1e6:8.3f} Mbit/J "
            f"active={row['mean_active_raus']:.2f} feasible={row['feasible_fraction']:.2f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
