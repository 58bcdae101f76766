#!/usr/bin/env python3
"""Welfare and ratio comparison across tenant-population sizes.

Runs every algorithm on the same seeded instances for each population size
and writes trials.csv / summary.csv / plot_data.json.
"""

import argparse

from slicemarket.harness import ExperimentSpec, aggregate, emit, run_trials
from slicemarket.workload import GenConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="10,50,100,200,500", help="comma list of tenant counts")
    parser.add_argument("--trials", type=int, default=100, help="trials per point (paper-scale: 1000)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--algos", default="posted_price,myopic,random,auction,genetic")
    parser.add_argument("--out", default="results/sweep_tenants")
    args = parser.parse_args()

    spec = ExperimentSpec(
        algos=tuple(args.algos.split(",")),
        base_config=GenConfig(),
        axis="tenants",
        values=tuple(int(v) for v in args.values.split(",")),
        trials=args.trials,
        seed=args.seed,
        oracle="auto",
    )
    metrics = run_trials(spec)
    rows = aggregate(metrics)
    paths = emit(metrics, rows, args.out, axis=spec.axis)
    for row in sorted(rows, key=lambda r: (r.point_index, r.algo)):
        ratio = "n/a" if row.ratio_median is None else f"{row.ratio_median:.3f}"
        print(
            f"N={row.point_value:>4} {row.algo:>12}: welfare median {row.welfare_median:.4f}, "
            f"ratio median {ratio}"
        )
    print("artifacts:", ", ".join(str(p) for p in paths.values()))


if __name__ == "__main__":
    main()
