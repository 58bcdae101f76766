#!/usr/bin/env python3
"""Overhead comparison at the default market size.

Prints a table of transferred data size, wall-clock runtime (normalized to
the posted-price mechanism) and welfare ratio for every algorithm.
"""

import argparse

from slicemarket.harness import ExperimentSpec, aggregate, run_trials
from slicemarket.workload import GenConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--c", type=int, default=3)
    parser.add_argument("--trials", type=int, default=100, help="trials (paper-scale: 1000)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = ExperimentSpec(
        algos=("posted_price", "myopic", "random", "auction", "genetic"),
        base_config=GenConfig(tenant_count=args.n, resource_count=args.c),
        trials=args.trials,
        seed=args.seed,
        oracle="exact",
        timing=True,
    )
    rows = aggregate(run_trials(spec))
    by_algo = {row.algo: row for row in rows}

    print(f"{'algorithm':>14} {'bytes':>10} {'runtime/posted':>15} {'welfare ratio':>14}")
    order = ("exact", "genetic", "auction", "posted_price", "myopic", "random")
    for algo in order:
        row = by_algo.get(algo)
        if row is None:
            continue
        tx = "-" if row.transcript_bytes_mean is None else f"{row.transcript_bytes_mean / 1000:.2f}KB"
        rel = "-" if row.runtime_vs_posted is None else f"{row.runtime_vs_posted:.2f}"
        ratio = "-" if row.ratio_median is None else f"{row.ratio_median:.3f}"
        print(f"{algo:>14} {tx:>10} {rel:>15} {ratio:>14}")


if __name__ == "__main__":
    main()
