"""Comparison algorithms: genetic heuristic, utility-bid auction, myopic and
random online slicing.

All of them consume the same instances as the posted-price mechanism and
return feasible allocations, so welfare numbers are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import CAPACITY, FEASIBILITY_EPS, PLUS_INF, MarketSetup, SetupError
from .oracle import adjusted_profits
from .protocol import SessionResult, run_session


# ---------------------------------------------------------------------------
# genetic heuristic


@dataclass(frozen=True)
class GaParams:
    population: int = 100
    generations: int = 200
    mutation_rate: float | None = None  # None: one expected flip per chromosome
    tournament: int = 3
    elitism: int = 2

    def __post_init__(self):
        if self.population < 2 or self.generations < 1:
            raise ValueError("population must be >= 2 and generations >= 1")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must leave room for offspring")
        if self.tournament < 1:
            raise ValueError("tournament size must be >= 1")


def _repair(selected: np.ndarray, demands: np.ndarray, density: np.ndarray) -> None:
    """Drop lowest-density selected items from overfull resources until feasible."""
    utilization = selected.astype(float) @ demands
    while (utilization > CAPACITY + FEASIBILITY_EPS).any():
        overfull = utilization > CAPACITY + FEASIBILITY_EPS
        uses_overfull = demands[:, overfull].sum(axis=1) > 0
        candidates = selected & uses_overfull
        victim = int(np.flatnonzero(candidates)[np.argmin(density[candidates])])
        selected[victim] = False
        utilization -= demands[victim]


def ga_heuristic(instance, params: GaParams | None = None, seed: int = 0) -> tuple[float, np.ndarray]:
    """Genetic search over accept/reject vectors with infeasibility repair.

    Always returns a feasible decision vector, so its welfare can never beat
    the exact offline optimum.
    """
    params = params or GaParams()
    n = instance.tenant_count
    profits = adjusted_profits(instance)
    viable = (profits > 0) & (instance.demands <= CAPACITY + FEASIBILITY_EPS).all(axis=1)
    index = np.flatnonzero(viable)
    m = len(index)
    full = np.zeros(n, dtype=bool)
    if m == 0:
        return 0.0, full
    w = profits[index]
    demands = instance.demands[index]
    aggregate = demands.sum(axis=1)
    with np.errstate(divide="ignore"):
        density = np.where(aggregate > 0, w / aggregate, np.inf)
    rate = params.mutation_rate if params.mutation_rate is not None else 1.0 / m

    rng = np.random.default_rng(seed)
    population = rng.random((params.population, m)) < 0.5
    for row in population:
        _repair(row, demands, density)
    fitness = population.astype(float) @ w

    best_value = float(fitness.max())
    best = population[int(np.argmax(fitness))].copy()
    for _ in range(params.generations):
        elite_idx = np.argsort(fitness)[-params.elitism :] if params.elitism else np.empty(0, dtype=int)
        n_offspring = params.population - params.elitism
        contenders = rng.integers(0, params.population, size=(n_offspring, 2, params.tournament))
        parents = contenders[
            np.arange(n_offspring)[:, None],
            np.arange(2)[None, :],
            np.argmax(fitness[contenders], axis=2),
        ]
        cut = rng.integers(1, max(m, 2), size=n_offspring)
        head = np.arange(m)[None, :] < cut[:, None]
        offspring = np.where(head, population[parents[:, 0]], population[parents[:, 1]])
        offspring ^= rng.random((n_offspring, m)) < rate
        for row in offspring:
            _repair(row, demands, density)
        population = np.concatenate([population[elite_idx], offspring])
        fitness = population.astype(float) @ w
        generation_best = float(fitness.max())
        if generation_best > best_value:
            best_value = generation_best
            best = population[int(np.argmax(fitness))].copy()

    full[index[best]] = True
    # recompute from the mask so the value is bit-identical to the oracle's
    # accounting for the same decision vector
    welfare = float(profits[full].sum()) if full.any() else 0.0
    return welfare, full


# ---------------------------------------------------------------------------
# utility-bid auction (offline, decentralized)


@dataclass(frozen=True)
class AuctionResult:
    welfare: float
    accepted: np.ndarray
    payments: np.ndarray
    rounds: int
    bids_submitted: int


def utility_bid_auction(instance) -> AuctionResult:
    """Iterative single-winner auction where bids equal tenant utilities.

    Each round every unallocated tenant with positive adjusted profit and a
    feasible demand bids; the operator accepts the bidder that increments its
    own utility the most (the tenant pays its full valuation) and the rest
    wait for the next round.  Terminates after at most one round per tenant.
    """
    n = instance.tenant_count
    profits = adjusted_profits(instance)
    utilization = np.zeros(instance.resource_count)
    accepted = np.zeros(n, dtype=bool)
    payments = np.zeros(n)
    rounds = 0
    bids = 0
    while True:
        fits = (utilization + instance.demands <= CAPACITY + FEASIBILITY_EPS).all(axis=1)
        bidders = ~accepted & (profits > 0) & fits
        if not bidders.any():
            break
        rounds += 1
        bids += int(bidders.sum())
        winner = int(np.argmax(np.where(bidders, profits, -np.inf)))
        accepted[winner] = True
        payments[winner] = float(instance.valuations[winner])
        utilization += instance.demands[winner]
    welfare = float(profits[accepted].sum()) if accepted.any() else 0.0
    return AuctionResult(welfare, accepted, payments, rounds, bids)


# ---------------------------------------------------------------------------
# myopic online slicing


@dataclass(frozen=True)
class MyopicPricing:
    """Linear price ramp from zero to the averaged band price at full capacity."""

    slopes: tuple[float, ...]

    @classmethod
    def from_setup(cls, setup: MarketSetup) -> "MyopicPricing":
        c = setup.resource_count
        slopes = tuple(float((setup.price_floors[i] + setup.price_caps[i]) / c) for i in range(c))
        return cls(slopes)

    @property
    def resource_count(self) -> int:
        return len(self.slopes)

    def price_at(self, c: int, y: float):
        if not 0 <= c < len(self.slopes):
            raise SetupError(f"resource index {c} out of range [0, {len(self.slopes)})")
        if y < 0:
            raise SetupError(f"utilization must be non-negative, got {y!r}")
        if y > CAPACITY:
            return PLUS_INF
        return self.slopes[c] * y


def myopic_slicing(instance, order: Sequence[int] | None = None) -> SessionResult:
    """Run the stop-and-wait protocol with the myopic linear price ramp."""
    setup = MarketSetup.from_instance(instance)
    return run_session(setup, MyopicPricing.from_setup(setup), instance, order)


# ---------------------------------------------------------------------------
# random online slicing


def random_slicing(instance, order: Sequence[int] | None = None, seed: int = 0) -> tuple[float, np.ndarray]:
    """Fair coin per arrival; an accepting coin only sticks when capacity allows."""
    n = instance.tenant_count
    order = range(n) if order is None else [int(t) for t in order]
    rng = np.random.default_rng(seed)
    profits = adjusted_profits(instance)
    utilization = [0.0] * instance.resource_count
    demand_rows = instance.demands.tolist()
    accepted = np.zeros(n, dtype=bool)
    for tenant in order:
        coin = int(rng.integers(0, 2))
        if not coin:
            continue
        row = demand_rows[tenant]
        if any(y + d > CAPACITY for y, d in zip(utilization, row)):
            continue
        for i, d in enumerate(row):
            utilization[i] += d
        accepted[tenant] = True
    welfare = float(profits[accepted].sum()) if accepted.any() else 0.0
    return welfare, accepted
