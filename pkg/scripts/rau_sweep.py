"""EE, rate and number of active RAUs versus the number of deployed RAUs.

    python scripts/rau_sweep.py [--config configs/rau_sweep.cfg] [--out results/rau_sweep.csv]
"""

import argparse
from pathlib import Path

from das_ee.harness import ExperimentConfig, load_config, run_rau_sweep, summarize, write_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=Path(__file__).parent.parent / "configs" / "rau_sweep.cfg")
    ap.add_argument("--out", default="results/rau_sweep.csv")
    ap.add_argument("--draws", type=int)
    ap.add_argument("--shadowing-db", type=float, help="override the shadowing spread")
    args = ap.parse_args()
    cfg = load_config(args.config)
    overrides = {}
    if args.draws:
        overrides["num_draws"] = args.draws
    if args.shadowing_db is not None:
        overrides["shadowing_std_db"] = args.shadowing_db
    cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    records = run_rau_sweep(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(records, args.out)
    single = {}
    for r in records:
        if r.strategy == "Distance":
            single.setdefault((r.rau_count, r.rate_min_bps), []).append(r.active_raus == 1)
    for row in summarize(records):
        key = (row["rau_count"], row["rate_min_bps"])
        extra = f" single-RAU {100 * sum(single[key]) / len(single[key]):5.1f}%" if row["strategy"] == "Distance" else ""
        print(
            f"I={row['rau_count']:2d} floor={row['rate_min_bps'] / 1e6:6.0f} Mbit/s {row['strategy']:>10} "
            f"EE={row['mean_ee_bits_per_joule'] / 1e6:8.3f} Mbit/J rate={row['mean_rate_bps'] / 1e6:7.1f} Mbit/s "
            f"RAUs={row['mean_active_raus']:.2f}{extra}"
        )


if __name__ == "__main__":
    main()
