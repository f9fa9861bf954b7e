"""Per-iteration objective of the three solvers with every RAU switched on.

    python scripts/convergence_traces.py [--seed 0] [--outdir results]

Writes one CSV per problem (rate maximization, EE maximization, power
minimization) and prints the iteration at which each trace settles.
"""

import argparse
from pathlib import Path

from das_ee.harness import ExperimentConfig, run_convergence_trace, write_trace_csv


def settle_index(values, rel=1e-3):
    last = values[-1]
    for k, v in enumerate(values, 1):
        if all(abs(x - last) <= rel * abs(last) for x in values[k - 1:]):
            return k
    return len(values)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--rau-counts", default="2,6,10")
    args = ap.parse_args()
    counts = tuple(int(x) for x in args.rau_counts.split(","))
    cfg = ExperimentConfig(seed=args.seed, trace_rau_counts=counts)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for problem in ("P1", "P2", "P3"):
        points = run_convergence_trace(cfg, problem)
        write_trace_csv(points, out / f"trace_{problem.lower()}.csv")
        for i in counts:
            series = [p.objective for p in points if p.rau_count == i]
            print(
                f"{problem} I={i:2d}: {len(series):3d} iterations, within 1e-3 of the final value from "
                f"iteration {settle_index(series)}, final {series[-1]:.6g} {points[0].unit}"
            )


if __name__ == "__main__":
    main()
