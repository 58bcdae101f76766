"""Seeded experiment harness: trial batches, sweeps, aggregation, artifacts.

Every trial draws one instance and one arrival permutation from seeds derived
deterministically from (base seed, sweep point, trial index); all selected
algorithms then consume that same instance and order, so per-trial numbers
are directly comparable.  Outputs are byte-stable for identical specs as long
as runtime measurement stays off.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import (
    GaParams,
    ga_heuristic,
    myopic_slicing,
    random_slicing,
    utility_bid_auction,
)
from .market import Allocation, MarketError, MarketSetup, social_welfare
from .oracle import DEFAULT_NODE_BUDGET, lp_upper_bound, offline_exact
from .pricing import build_schedule
from .protocol import run_session, transcript_to_jsonl, transferred_data_bytes
from .workload import GenConfig, generate_instance

ALGORITHMS = ("posted_price", "myopic", "random", "auction", "genetic")
ORACLE_MODES = ("exact", "lp", "auto")
AXES = ("tenants", "resources", "demand_mean", "unit_cost_range", "pay_level_range")
AUTO_EXACT_LIMIT = 25

TRIAL_CSV_HEADER = (
    "trial,algo,N,C,seed,welfare,rental_rate,ratio,theoretical_alpha,runtime_ns,transcript_bytes"
)


class HarnessError(MarketError):
    """An experiment spec is invalid."""


class EmitError(MarketError):
    """Writing an artifact failed."""

    def __init__(self, path, cause):
        self.path = Path(path)
        super().__init__(f"cannot write {self.path}: {cause}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One batch of seeded trials, optionally swept along a single axis."""

    algos: tuple[str, ...] = ("posted_price",)
    base_config: GenConfig = field(default_factory=GenConfig)
    axis: str | None = None
    values: tuple = ()
    trials: int = 1000
    seed: int = 0
    oracle: str = "auto"
    transcripts: bool = False
    timing: bool = False
    node_budget: int = DEFAULT_NODE_BUDGET
    ga_params: GaParams = field(default_factory=GaParams)
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "algos", tuple(self.algos))
        object.__setattr__(self, "values", tuple(self.values))
        for algo in self.algos:
            if algo not in ALGORITHMS:
                raise HarnessError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
        if not self.algos:
            raise HarnessError("at least one algorithm must be selected")
        if self.oracle not in ORACLE_MODES:
            raise HarnessError(f"unknown oracle mode {self.oracle!r}; choose from {ORACLE_MODES}")
        if self.axis is not None:
            if self.axis not in AXES:
                raise HarnessError(f"unknown sweep axis {self.axis!r}; choose from {AXES}")
            if not self.values:
                raise HarnessError("a sweep needs a non-empty value list")
        elif self.values:
            raise HarnessError("sweep values given without a sweep axis")
        if self.trials < 1:
            raise HarnessError("trials must be at least 1")

    def to_dict(self) -> dict:
        return {
            "algos": list(self.algos),
            "config": self.base_config.to_dict(),
            "axis": self.axis,
            "values": [list(v) if isinstance(v, (tuple, list)) else v for v in self.values],
            "trials": self.trials,
            "seed": self.seed,
            "oracle": self.oracle,
            "transcripts": self.transcripts,
            "timing": self.timing,
            "node_budget": self.node_budget,
            "out": self.out,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {
            "algos": tuple(data.get("algos", ("posted_price",))),
            "base_config": GenConfig.from_dict(data.get("config", {})),
            "axis": data.get("axis"),
            "values": tuple(tuple(v) if isinstance(v, list) else v for v in data.get("values", ())),
            "trials": data.get("trials", 1000),
            "seed": data.get("seed", 0),
            "oracle": data.get("oracle", "auto"),
            "transcripts": data.get("transcripts", False),
            "timing": data.get("timing", False),
            "node_budget": data.get("node_budget", DEFAULT_NODE_BUDGET),
            "out": data.get("out"),
        }
        if "ga_params" in data and data["ga_params"]:
            known["ga_params"] = GaParams(**data["ga_params"])
        return cls(**known)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TrialMetrics:
    point_index: int
    point_value: object
    trial: int
    algo: str
    tenants: int
    resources: int
    seed: int
    welfare: float
    rental_rates: tuple[float, ...] | None
    rental_rate: float | None
    ratio: float | None
    ratio_is_bound: bool
    theoretical_alpha: float
    runtime_ns: int | None
    transcript_bytes: int | None
    transcript: tuple | None = None


def _apply_axis(config: GenConfig, axis: str | None, value) -> GenConfig:
    if axis is None:
        return config
    if axis == "tenants":
        # pin the base demand distribution so the sweep varies only the
        # population, not the per-tenant demand statistics
        return replace(
            config,
            tenant_count=int(value),
            demand_mean=config.resolved_demand_mean,
            demand_std=config.resolved_demand_std,
        )
    if axis == "resources":
        return replace(config, resource_count=int(value))
    if axis == "demand_mean":
        return replace(config, demand_mean=float(value))
    if axis == "unit_cost_range":
        lo, hi = value
        return replace(config, unit_cost_range=(float(lo), float(hi)))
    if axis == "pay_level_range":
        lo, hi = value
        return replace(config, pay_level_range=(float(lo), float(hi)))
    raise HarnessError(f"unknown sweep axis {axis!r}")


def _centralized_bytes(instance) -> int:
    # a centralized solver needs the whole problem: demands, valuations, costs
    n, c = instance.tenant_count, instance.resource_count
    return 4 * (n * c + n + c)


def _ratio(reference: float, welfare: float) -> float | None:
    if welfare > 0:
        return reference / welfare
    return None


def run_trials(spec: ExperimentSpec) -> list[TrialMetrics]:
    """Execute the spec and return one metrics record per (point, trial, algo).

    Each trial also carries a reference record named after the oracle used
    (``exact`` or ``lp_bound``); every ratio column is that reference divided
    by the row's welfare.
    """
    points = spec.values if spec.axis is not None else (None,)
    out: list[TrialMetrics] = []
    for point_index, point_value in enumerate(points):
        config_point = _apply_axis(spec.base_config, spec.axis, point_value)
        use_exact = spec.oracle == "exact" or (
            spec.oracle == "auto" and config_point.tenant_count <= AUTO_EXACT_LIMIT
        )
        for trial in range(spec.trials):
            root = np.random.SeedSequence([spec.seed, point_index, trial])
            seed_instance, seed_order, seed_algo = (
                int(child.generate_state(1)[0]) for child in root.spawn(3)
            )
            config = replace(config_point, seed=seed_instance)
            instance = generate_instance(config)
            order = np.random.default_rng(seed_order).permutation(instance.tenant_count)
            setup = MarketSetup.from_instance(instance)
            schedule = build_schedule(setup)
            alpha = schedule.ratio

            def welfare_of(accepted) -> float:
                return social_welfare(setup, instance, Allocation.from_decisions(instance, accepted))

            def clocked(fn):
                if not spec.timing:
                    return fn(), None
                start = time.perf_counter_ns()
                result = fn()
                return result, time.perf_counter_ns() - start

            # reference row
            if use_exact:
                oracle_run, oracle_ns = clocked(
                    lambda: offline_exact(instance, method="auto", node_budget=spec.node_budget)
                )
                if oracle_run.exact:
                    reference = welfare_of(oracle_run.accepted)
                    reference_is_bound = False
                else:
                    reference = float(oracle_run.upper_bound)
                    reference_is_bound = True
                oracle_alloc = Allocation.from_decisions(instance, oracle_run.accepted)
                out.append(
                    TrialMetrics(
                        point_index, point_value, trial, "exact",
                        instance.tenant_count, instance.resource_count, seed_instance,
                        welfare=welfare_of(oracle_run.accepted),
                        rental_rates=tuple(oracle_alloc.utilization.tolist()),
                        rental_rate=float(oracle_alloc.utilization.mean()),
                        ratio=_ratio(reference, welfare_of(oracle_run.accepted)),
                        ratio_is_bound=reference_is_bound,
                        theoretical_alpha=alpha,
                        runtime_ns=oracle_ns,
                        transcript_bytes=_centralized_bytes(instance),
                    )
                )
            else:
                bound, oracle_ns = clocked(lambda: lp_upper_bound(instance))
                reference = float(bound)
                reference_is_bound = True
                out.append(
                    TrialMetrics(
                        point_index, point_value, trial, "lp_bound",
                        instance.tenant_count, instance.resource_count, seed_instance,
                        welfare=reference,
                        rental_rates=None,
                        rental_rate=None,
                        ratio=1.0 if reference > 0 else None,
                        ratio_is_bound=True,
                        theoretical_alpha=alpha,
                        runtime_ns=oracle_ns,
                        transcript_bytes=_centralized_bytes(instance),
                    )
                )

            algo_seeds = np.random.SeedSequence([seed_algo]).spawn(len(spec.algos))
            for algo, algo_seed_seq in zip(spec.algos, algo_seeds):
                algo_seed = int(algo_seed_seq.generate_state(1)[0])
                transcript = None
                payments = None
                if algo == "posted_price":
                    session, ns = clocked(lambda: run_session(setup, schedule, instance, order))
                    accepted = session.allocation.accepted
                    payments = session.payments
                    tx_bytes = transferred_data_bytes(session.ledger.transcript)
                    transcript = tuple(session.ledger.transcript) if spec.transcripts else None
                elif algo == "myopic":
                    session, ns = clocked(lambda: myopic_slicing(instance, order))
                    accepted = session.allocation.accepted
                    payments = session.payments
                    tx_bytes = transferred_data_bytes(session.ledger.transcript)
                    transcript = tuple(session.ledger.transcript) if spec.transcripts else None
                elif algo == "random":
                    (_, accepted), ns = clocked(lambda: random_slicing(instance, order, seed=algo_seed))
                    tx_bytes = None
                elif algo == "auction":
                    auction, ns = clocked(lambda: utility_bid_auction(instance))
                    accepted = auction.accepted
                    payments = auction.payments
                    tx_bytes = 4 * (auction.bids_submitted * (1 + instance.resource_count) + auction.rounds)
                elif algo == "genetic":
                    (_, accepted), ns = clocked(
                        lambda: ga_heuristic(instance, spec.ga_params, seed=algo_seed)
                    )
                    tx_bytes = _centralized_bytes(instance)
                else:  # pragma: no cover - guarded by the spec validation
                    raise HarnessError(f"unknown algorithm {algo!r}")
                allocation = Allocation.from_decisions(instance, accepted)
                welfare = social_welfare(setup, instance, allocation)
                out.append(
                    TrialMetrics(
                        point_index, point_value, trial, algo,
                        instance.tenant_count, instance.resource_count, seed_instance,
                        welfare=welfare,
                        rental_rates=tuple(allocation.utilization.tolist()),
                        rental_rate=float(allocation.utilization.mean()),
                        ratio=_ratio(reference, welfare),
                        ratio_is_bound=reference_is_bound,
                        theoretical_alpha=alpha,
                        runtime_ns=ns,
                        transcript_bytes=tx_bytes,
                        transcript=transcript,
                    )
                )
    return out


@dataclass(frozen=True)
class SummaryRow:
    point_index: int
    point_value: object
    algo: str
    trials: int
    welfare_mean: float
    welfare_median: float
    welfare_p5: float
    welfare_p95: float
    rental_mean: float | None
    ratio_defined: int
    ratio_undefined: int
    ratio_mean: float | None
    ratio_median: float | None
    ratio_p5: float | None
    ratio_p95: float | None
    ratio_max: float | None
    alpha_mean: float
    alpha_max: float
    runtime_median_ns: float | None
    runtime_vs_posted: float | None
    transcript_bytes_mean: float | None


def _percentiles(values: Sequence[float]) -> tuple[float, float, float, float]:
    arr = np.asarray(values, dtype=float)
    return (
        float(arr.mean()),
        float(np.median(arr)),
        float(np.percentile(arr, 5)),
        float(np.percentile(arr, 95)),
    )


def aggregate(metrics: Sequence[TrialMetrics]) -> list[SummaryRow]:
    """Per (sweep point, algorithm) statistics over the trial batch."""
    if not metrics:
        raise HarnessError("nothing to aggregate")
    groups: dict[tuple[int, str], list[TrialMetrics]] = {}
    for record in metrics:
        groups.setdefault((record.point_index, record.algo), []).append(record)
    posted_runtime: dict[int, float] = {}
    for (point_index, algo), records in groups.items():
        if algo == "posted_price":
            runtimes = [r.runtime_ns for r in records if r.runtime_ns is not None]
            if runtimes:
                posted_runtime[point_index] = float(np.median(runtimes))
    rows = []
    for (point_index, algo), records in groups.items():
        welfare_mean, welfare_median, welfare_p5, welfare_p95 = _percentiles(
            [r.welfare for r in records]
        )
        rentals = [r.rental_rate for r in records if r.rental_rate is not None]
        ratios = [r.ratio for r in records if r.ratio is not None]
        runtimes = [r.runtime_ns for r in records if r.runtime_ns is not None]
        tx = [r.transcript_bytes for r in records if r.transcript_bytes is not None]
        if ratios:
            ratio_mean, ratio_median, ratio_p5, ratio_p95 = _percentiles(ratios)
            ratio_max = float(max(ratios))
        else:
            ratio_mean = ratio_median = ratio_p5 = ratio_p95 = ratio_max = None
        alphas = [r.theoretical_alpha for r in records]
        runtime_median = float(np.median(runtimes)) if runtimes else None
        base_runtime = posted_runtime.get(point_index)
        normalized = (
            runtime_median / base_runtime
            if runtime_median is not None and base_runtime
            else None
        )
        rows.append(
            SummaryRow(
                point_index=point_index,
                point_value=records[0].point_value,
                algo=algo,
                trials=len(records),
                welfare_mean=welfare_mean,
                welfare_median=welfare_median,
                welfare_p5=welfare_p5,
                welfare_p95=welfare_p95,
                rental_mean=float(np.mean(rentals)) if rentals else None,
                ratio_defined=len(ratios),
                ratio_undefined=len(records) - len(ratios),
                ratio_mean=ratio_mean,
                ratio_median=ratio_median,
                ratio_p5=ratio_p5,
                ratio_p95=ratio_p95,
                ratio_max=ratio_max,
                alpha_mean=float(np.mean(alphas)),
                alpha_max=float(max(alphas)),
                runtime_median_ns=runtime_median,
                runtime_vs_posted=normalized,
                transcript_bytes_mean=float(np.mean(tx)) if tx else None,
            )
        )
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return json.dumps(list(value))
    return str(value)


def trials_csv(metrics: Sequence[TrialMetrics]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRIAL_CSV_HEADER.split(","))
    for r in metrics:
        writer.writerow(
            [
                r.trial, r.algo, r.tenants, r.resources, r.seed,
                _fmt(r.welfare), _fmt(r.rental_rate), _fmt(r.ratio),
                _fmt(r.theoretical_alpha), _fmt(r.runtime_ns), _fmt(r.transcript_bytes),
            ]
        )
    return buffer.getvalue()


def read_trials_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def summary_csv(rows: Sequence[SummaryRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = [
        "point_index", "point_value", "algo", "trials",
        "welfare_mean", "welfare_median", "welfare_p5", "welfare_p95",
        "rental_mean", "ratio_defined", "ratio_undefined",
        "ratio_mean", "ratio_median", "ratio_p5", "ratio_p95", "ratio_max",
        "alpha_mean", "alpha_max", "runtime_median_ns", "runtime_vs_posted",
        "transcript_bytes_mean",
    ]
    writer.writerow(header)
    for r in rows:
        writer.writerow(
            [
                r.point_index, _fmt(r.point_value), r.algo, r.trials,
                _fmt(r.welfare_mean), _fmt(r.welfare_median), _fmt(r.welfare_p5), _fmt(r.welfare_p95),
                _fmt(r.rental_mean), r.ratio_defined, r.ratio_undefined,
                _fmt(r.ratio_mean), _fmt(r.ratio_median), _fmt(r.ratio_p5), _fmt(r.ratio_p95),
                _fmt(r.ratio_max), _fmt(r.alpha_mean), _fmt(r.alpha_max),
                _fmt(r.runtime_median_ns), _fmt(r.runtime_vs_posted),
                _fmt(r.transcript_bytes_mean),
            ]
        )
    return buffer.getvalue()


def plot_data(rows: Sequence[SummaryRow], axis: str | None) -> dict:
    """Per-algorithm series against the sweep axis, ready for plotting."""
    points: dict[int, object] = {}
    for r in rows:
        points[r.point_index] = r.point_value
    xs = [points[i] for i in sorted(points)]
    series: dict[str, dict[str, list]] = {}
    for r in sorted(rows, key=lambda r: r.point_index):
        entry = series.setdefault(
            r.algo,
            {"welfare_mean": [], "welfare_median": [], "ratio_median": [], "rental_mean": []},
        )
        entry["welfare_mean"].append(r.welfare_mean)
        entry["welfare_median"].append(r.welfare_median)
        entry["ratio_median"].append(r.ratio_median)
        entry["rental_mean"].append(r.rental_mean)
    return {
        "axis": axis,
        "x": [list(x) if isinstance(x, (tuple, list)) else x for x in xs],
        "series": series,
    }


def emit(
    metrics: Sequence[TrialMetrics],
    rows: Sequence[SummaryRow],
    out_dir: str | Path,
    axis: str | None = None,
) -> dict[str, Path]:
    """Write trials.csv, summary.csv, plot_data.json and optional transcripts."""
    out_dir = Path(out_dir)
    paths: dict[str, Path] = {}

    def write(name: str, content: str) -> Path:
        path = out_dir / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content)
        except OSError as exc:
            raise EmitError(path, exc) from exc
        paths[name] = path
        return path

    write("trials.csv", trials_csv(metrics))
    write("summary.csv", summary_csv(rows))
    write("plot_data.json", json.dumps(plot_data(rows, axis), indent=2, sort_keys=True) + "\n")
    for r in metrics:
        if r.transcript is not None:
            write(
                f"transcripts/{r.algo}_point{r.point_index}_trial{r.trial}.jsonl",
                transcript_to_jsonl(r.transcript),
            )
    return paths
