#!/usr/bin/env python3
"""Welfare and ratio comparison across resource-type counts."""

import argparse

from slicemarket.harness import ExperimentSpec, aggregate, emit, run_trials
from slicemarket.workload import GenConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="1,3,5,7,9", help="comma list of resource counts")
    parser.add_argument("--trials", type=int, default=100, help="trials per point (paper-scale: 1000)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--algos", default="posted_price,myopic,random,auction,genetic")
    parser.add_argument("--out", default="results/sweep_resources")
    args = parser.parse_args()

    spec = ExperimentSpec(
        algos=tuple(args.algos.split(",")),
        base_config=GenConfig(),
        axis="resources",
        values=tuple(int(v) for v in args.values.split(",")),
        trials=args.trials,
        seed=args.seed,
        oracle="lp",
    )
    metrics = run_trials(spec)
    rows = aggregate(metrics)
    paths = emit(metrics, rows, args.out, axis=spec.axis)
    for row in sorted(rows, key=lambda r: (r.point_index, r.algo)):
        rental = "n/a" if row.rental_mean is None else f"{row.rental_mean:.3f}"
        print(
            f"C={row.point_value} {row.algo:>12}: welfare median {row.welfare_median:.4f}, "
            f"rental mean {rental}"
        )
    print("artifacts:", ", ".join(str(p) for p in paths.values()))


if __name__ == "__main__":
    main()
