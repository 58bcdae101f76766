#!/usr/bin/env python3
"""Sensitivity sweeps: demand mean, unit-cost range, pay-level range."""

import argparse

from slicemarket.harness import ExperimentSpec, aggregate, emit, run_trials
from slicemarket.workload import GenConfig

SWEEPS = {
    "demand_mean": (0.005, 0.01, 0.02, 0.04),
    "unit_cost_range": ((0.05, 0.25), (1 / 6, 5 / 6), (0.5, 0.9)),
    "pay_level_range": ((2.0, 4.0), (2.0, 6.0), (2.0, 10.0)),
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--axis", choices=sorted(SWEEPS), default="demand_mean")
    parser.add_argument("--trials", type=int, default=100, help="trials per point (paper-scale: 1000)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--algos", default="posted_price,myopic,random,auction")
    parser.add_argument("--out", default=None, help="default: results/sensitivity_<axis>")
    args = parser.parse_args()

    spec = ExperimentSpec(
        algos=tuple(args.algos.split(",")),
        base_config=GenConfig(),
        axis=args.axis,
        values=SWEEPS[args.axis],
        trials=args.trials,
        seed=args.seed,
        oracle="lp",
    )
    metrics = run_trials(spec)
    rows = aggregate(metrics)
    out = args.out or f"results/sensitivity_{args.axis}"
    paths = emit(metrics, rows, out, axis=spec.axis)
    for row in sorted(rows, key=lambda r: (r.point_index, r.algo)):
        ratio = "n/a" if row.ratio_median is None else f"{row.ratio_median:.3f}"
        print(
            f"{args.axis}={row.point_value} {row.algo:>12}: "
            f"welfare median {row.welfare_median:.4f}, bound ratio median {ratio}"
        )
    print("artifacts:", ", ".join(str(p) for p in paths.values()))


if __name__ == "__main__":
    main()
