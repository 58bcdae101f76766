"""Randomized tenant populations and market instances.

Tenants are service providers with a private subscriber base.  Each
subscriber sits at a quality tier; tier populations follow a pyramid (every
tier holds roughly half the users of the tier below) on top of a free tier,
and a subscriber at tier ``k`` pays ``pay_level * k``.  A tenant's valuation
is the tier-weighted sum of those payments.  Raw valuations are rescaled by
one global factor so the median earning density is 1, which leaves every
accept/reject decision and welfare ratio unchanged.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .market import MarketError, _readonly

MIN_DEMAND = 1e-6
_MAX_RESAMPLE_ROUNDS = 1000


class WorkloadError(MarketError):
    """A generator configuration or generated instance is unusable."""


@dataclass(frozen=True)
class GenConfig:
    """Knobs of the instance generator; defaults follow the benchmark workload."""

    tenant_count: int = 100
    resource_count: int = 3
    demand_mean: float | None = None  # None: 1 / tenant_count
    demand_std: float | None = None  # None: 1 / tenant_count**2
    subscriber_mean: float = 1e6
    subscriber_std: float = 1e5
    pay_level_range: tuple[float, float] = (2.0, 6.0)
    top_tier_range: tuple[float, float] = (2.0, 6.0)
    free_user_fraction: float = 0.4
    tier_decay: float = 0.5
    unit_cost_range: tuple[float, float] = (1.0 / 6.0, 5.0 / 6.0)  # fractions of the floor
    density_margin: float = 0.0
    participation: float | None = None  # None: every tenant demands every resource
    seed: int = 0

    def __post_init__(self):
        if self.tenant_count < 1:
            raise WorkloadError("tenant_count must be at least 1")
        if self.resource_count < 1:
            raise WorkloadError("resource_count must be at least 1")
        if self.demand_mean is not None and not self.demand_mean > 0:
            raise WorkloadError("demand_mean must be positive")
        if self.demand_std is not None and not self.demand_std >= 0:
            raise WorkloadError("demand_std must be non-negative")
        if not 0 <= self.free_user_fraction < 1:
            raise WorkloadError("free_user_fraction must lie in [0, 1)")
        if not 0 < self.tier_decay < 1:
            raise WorkloadError("tier_decay must lie in (0, 1)")
        for name in ("pay_level_range", "top_tier_range", "unit_cost_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise WorkloadError(f"{name} must satisfy 0 < low <= high")
        lo, hi = self.unit_cost_range
        if hi >= 1:
            raise WorkloadError("unit_cost_range must stay below 1 so costs stay below the floor")
        if self.top_tier_range[0] < 1:
            raise WorkloadError("top_tier_range must start at 1 or above")
        if not 0 <= self.density_margin < 1:
            raise WorkloadError("density_margin must lie in [0, 1)")
        if self.participation is not None and not 0 < self.participation <= 1:
            raise WorkloadError("participation must lie in (0, 1]")

    @property
    def resolved_demand_mean(self) -> float:
        return self.demand_mean if self.demand_mean is not None else 1.0 / self.tenant_count

    @property
    def resolved_demand_std(self) -> float:
        return self.demand_std if self.demand_std is not None else 1.0 / self.tenant_count**2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        data = dict(data)
        for name in ("pay_level_range", "top_tier_range", "unit_cost_range"):
            if name in data and data[name] is not None:
                data[name] = tuple(data[name])
        return cls(**data)


@dataclass(frozen=True)
class TenantPrivate:
    """Private valuation internals of one tenant.  Never enters the protocol."""

    subscriber_count: int
    free_count: int
    tier_counts: tuple[int, ...]  # paying subscribers at tier k = index + 1
    pay_level: float
    raw_valuation: float


@dataclass(frozen=True)
class Instance:
    """One market instance: public demands plus collapsed private valuations."""

    demands: np.ndarray  # (tenants, resources)
    valuations: np.ndarray  # (tenants,)
    price_floors: np.ndarray  # (resources,)
    price_caps: np.ndarray
    unit_costs: np.ndarray
    seed: int | None = None
    config: GenConfig | None = None

    def __post_init__(self):
        for name in ("demands", "valuations", "price_floors", "price_caps", "unit_costs"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.demands.ndim != 2:
            raise WorkloadError("demands must be a 2-D tenant-by-resource matrix")
        n, c = self.demands.shape
        if self.valuations.shape != (n,):
            raise WorkloadError("valuations must have one entry per tenant")
        for name in ("price_floors", "price_caps", "unit_costs"):
            if getattr(self, name).shape != (c,):
                raise WorkloadError(f"{name} must have one entry per resource")

    @property
    def tenant_count(self) -> int:
        return self.demands.shape[0]

    @property
    def resource_count(self) -> int:
        return self.demands.shape[1]

    def densities(self) -> np.ndarray:
        """Earning density per tenant and resource; NaN where nothing is demanded."""
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = self.valuations[:, None] / self.demands
        return np.where(self.demands > 0, dens, np.nan)

    def to_dict(self) -> dict:
        return {
            "demands": self.demands.tolist(),
            "valuations": self.valuations.tolist(),
            "bounds": {
                "lower": self.price_floors.tolist(),
                "upper": self.price_caps.tolist(),
            },
            "costs": self.unit_costs.tolist(),
            "seed": self.seed,
            "config": self.config.to_dict() if self.config is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        config = data.get("config")
        return cls(
            demands=np.asarray(data["demands"], dtype=float),
            valuations=np.asarray(data["valuations"], dtype=float),
            price_floors=np.asarray(data["bounds"]["lower"], dtype=float),
            price_caps=np.asarray(data["bounds"]["upper"], dtype=float),
            unit_costs=np.asarray(data["costs"], dtype=float),
            seed=data.get("seed"),
            config=GenConfig.from_dict(config) if config else None,
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict()) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Instance":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Violation:
    """One breached instance invariant, naming the offending tenant/resource."""

    code: str
    message: str
    tenant: int | None = None
    resource: int | None = None

    def __str__(self):
        return self.message


def derive_bounds(densities: np.ndarray, margin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-resource density bounds from observed densities (NaN = no demand).

    A resource nobody demands inherits the global density range so its bounds
    stay well defined.
    """
    densities = np.asarray(densities, dtype=float)
    if densities.ndim == 1:
        densities = densities[:, None]
    valid = ~np.isnan(densities)
    if not valid.any():
        raise WorkloadError("cannot derive bounds: no positive density anywhere")
    global_min = float(np.nanmin(densities))
    global_max = float(np.nanmax(densities))
    floors = np.empty(densities.shape[1])
    caps = np.empty(densities.shape[1])
    for c in range(densities.shape[1]):
        col = densities[valid[:, c], c]
        if col.size:
            floors[c] = (1.0 - margin) * float(col.min())
            caps[c] = (1.0 + margin) * float(col.max())
        else:
            floors[c] = (1.0 - margin) * global_min
            caps[c] = (1.0 + margin) * global_max
    return floors, caps


def _sample_demands(config: GenConfig, rng: np.random.Generator) -> np.ndarray:
    n, c = config.tenant_count, config.resource_count
    if config.participation is None:
        active = np.ones((n, c), dtype=bool)
    else:
        active = rng.random((n, c)) < config.participation
        for _ in range(_MAX_RESAMPLE_ROUNDS):
            empty = ~active.any(axis=1)
            if not empty.any():
                break
            active[empty] = rng.random((int(empty.sum()), c)) < config.participation
        else:
            # forcing one resource keeps a pathological participation usable
            empty = ~active.any(axis=1)
            active[empty, 0] = True
    demands = rng.normal(config.resolved_demand_mean, config.resolved_demand_std, size=(n, c))
    for _ in range(_MAX_RESAMPLE_ROUNDS):
        bad = active & (demands <= MIN_DEMAND)
        if not bad.any():
            break
        demands[bad] = rng.normal(config.resolved_demand_mean, config.resolved_demand_std, size=int(bad.sum()))
    else:
        raise WorkloadError("demand resampling failed; demand_mean is too close to zero")
    demands[~active] = 0.0
    return demands


def _sample_tenants(
    config: GenConfig, rng: np.random.Generator, payment_fn: Callable[[float], float] | None
) -> tuple[np.ndarray, list[TenantPrivate]]:
    n = config.tenant_count
    subscribers = np.rint(rng.normal(config.subscriber_mean, config.subscriber_std, size=n))
    subscribers = np.maximum(subscribers, 1.0).astype(np.int64)

    pay_levels = rng.uniform(*config.pay_level_range, size=n)
    top_tiers = np.ceil(rng.uniform(*config.top_tier_range, size=n)).astype(np.int64)

    free = rng.binomial(subscribers, config.free_user_fraction)
    # a tenant with zero paying subscribers has zero valuation and would
    # collapse the density floor; redraw its free count
    for _ in range(_MAX_RESAMPLE_ROUNDS):
        stuck = free >= subscribers
        if not stuck.any():
            break
        free[stuck] = rng.binomial(subscribers[stuck], config.free_user_fraction)
    else:
        stuck = free >= subscribers
        free[stuck] = subscribers[stuck] - 1
    paying = subscribers - free

    tier_counts = np.zeros((n, int(top_tiers.max())), dtype=np.int64)
    for tiers in np.unique(top_tiers):
        rows = np.flatnonzero(top_tiers == tiers)
        weights = config.tier_decay ** np.arange(1, tiers + 1)
        weights /= weights.sum()
        tier_counts[rows, :tiers] = rng.multinomial(paying[rows], weights)

    tiers = np.arange(1, tier_counts.shape[1] + 1)
    if payment_fn is None:
        # subscriber at tier k pays pay_level * k and is weighted by its tier
        raw = pay_levels * (tier_counts @ (tiers**2))
    else:
        raw = np.array(
            [
                sum(k * count * payment_fn(pay_levels[i] * k) for k, count in zip(tiers, tier_counts[i]))
                for i in range(n)
            ],
            dtype=float,
        )
    if not (raw > 0).all():
        raise WorkloadError("degenerate payment function: some tenant has non-positive valuation")

    privates = [
        TenantPrivate(
            subscriber_count=int(subscribers[i]),
            free_count=int(free[i]),
            tier_counts=tuple(int(v) for v in tier_counts[i]),
            pay_level=float(pay_levels[i]),
            raw_valuation=float(raw[i]),
        )
        for i in range(n)
    ]
    return raw, privates


def generate_population(
    config: GenConfig, payment_fn: Callable[[float], float] | None = None
) -> tuple[Instance, list[TenantPrivate]]:
    """Sample an instance together with the private tenant records behind it."""
    rng = np.random.default_rng(config.seed)
    demands = _sample_demands(config, rng)
    raw_valuations, privates = _sample_tenants(config, rng, payment_fn)

    with np.errstate(divide="ignore", invalid="ignore"):
        raw_densities = np.where(demands > 0, raw_valuations[:, None] / demands, np.nan)
    scale = float(np.nanmedian(raw_densities))
    if not scale > 0:
        raise WorkloadError("degenerate configuration: median earning density is not positive")
    valuations = raw_valuations / scale

    with np.errstate(divide="ignore", invalid="ignore"):
        densities = np.where(demands > 0, valuations[:, None] / demands, np.nan)
    floors, caps = derive_bounds(densities, config.density_margin)
    lo, hi = config.unit_cost_range
    unit_costs = floors * rng.uniform(lo, hi, size=config.resource_count)

    instance = Instance(
        demands=demands,
        valuations=valuations,
        price_floors=floors,
        price_caps=caps,
        unit_costs=unit_costs,
        seed=config.seed,
        config=config,
    )
    problems = validate_instance(instance)
    if problems:
        raise WorkloadError(f"generated instance violates its invariants: {problems[0]}")
    return instance, privates


def generate_instance(config: GenConfig, payment_fn: Callable[[float], float] | None = None) -> Instance:
    """Sample a market instance; identical (config, seed) gives identical output."""
    instance, _ = generate_population(config, payment_fn)
    return instance


def validate_instance(instance: Instance) -> list[Violation]:
    """Collect every breached invariant; an empty list means the instance is sound."""
    violations: list[Violation] = []
    if (instance.demands < 0).any():
        n, c = map(int, np.argwhere(instance.demands < 0)[0])
        violations.append(
            Violation("negative-demand", f"tenant {n} demands {instance.demands[n, c]!r} of resource {c}", n, c)
        )
    if (instance.valuations < 0).any():
        n = int(np.argmax(instance.valuations < 0))
        violations.append(Violation("negative-valuation", f"tenant {n} has valuation {instance.valuations[n]!r}", n))
    for c in range(instance.resource_count):
        lo, hi, q = instance.price_floors[c], instance.price_caps[c], instance.unit_costs[c]
        if not lo <= hi:
            violations.append(
                Violation("bounds-crossed", f"resource {c}: floor {lo!r} above cap {hi!r}", resource=c)
            )
        if not q > 0:
            violations.append(Violation("cost-not-positive", f"resource {c}: 0 < q_c violated (q={q!r})", resource=c))
        if not q < lo:
            violations.append(
                Violation("cost-at-floor", f"resource {c}: q_c < floor violated (q={q!r}, floor={lo!r})", resource=c)
            )
    densities = instance.densities()
    for n, c in zip(*np.nonzero(instance.demands > 0)):
        e = densities[n, c]
        if e < instance.price_floors[c]:
            violations.append(
                Violation(
                    "density-below-floor",
                    f"tenant {int(n)} resource {int(c)}: density {e!r} below floor {instance.price_floors[c]!r}",
                    int(n),
                    int(c),
                )
            )
        elif e > instance.price_caps[c]:
            violations.append(
                Violation(
                    "density-above-cap",
                    f"tenant {int(n)} resource {int(c)}: density {e!r} above cap {instance.price_caps[c]!r}",
                    int(n),
                    int(c),
                )
            )
    return violations


def with_seed(config: GenConfig, seed: int) -> GenConfig:
    return replace(config, seed=seed)
