"""EE and rate of every strategy versus the rate floor.

    python scripts/rate_sweep.py [--config configs/rate_sweep.cfg] [--out results/rate_sweep.csv]
"""

import argparse
from pathlib import Path

from das_ee.harness import ExperimentConfig, load_config, run_rate_sweep, summarize, write_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=Path(__file__).parent.parent / "configs" / "rate_sweep.cfg")
    ap.add_argument("--out", default="results/rate_sweep.csv")
    ap.add_argument("--draws", type=int)
    args = ap.parse_args()
    cfg = load_config(args.config)
    if args.draws:
        cfg = ExperimentConfig(**{**cfg.__dict__, "num_draws": args.draws})
    records = run_rate_sweep(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(records, args.out)
    print(f"{'floor Mbit/s':>12} {'strategy':>10} {'rate Mbit/s':>12} {'EE Mbit/J':>10} {'RAUs':>5} {'feasible':>8}")
    for row in summarize(records):
        print(
            f"{row['rate_min_bps'] / 1e6:12.0f} {row['strategy']:>10} {row['mean_rate_bps'] / 1e6:12.1f} "
            f"{row['mean_ee_bits_per_joule'] / 1e6:10.3f} {row['mean_active_raus']:5.2f} {row['feasible_fraction']:8.2f}"
        )


if __name__ == "__main__":
    main()
