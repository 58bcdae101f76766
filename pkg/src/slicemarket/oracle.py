"""Exact offline welfare maximization and its linear-programming upper bound.

With linear costs the offline problem collapses to a multidimensional 0/1
knapsack: maximize the sum of adjusted profits ``valuation - cost of the
demanded bundle`` subject to unit capacity per resource.  Small instances are
enumerated exhaustively; larger ones run a depth-first branch-and-bound with
a fractional-knapsack bound on the aggregated capacity constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .market import CAPACITY, FEASIBILITY_EPS, MarketError

EXHAUSTIVE_LIMIT = 25
_EXHAUSTIVE_CHUNK = 1 << 16
_AUTO_EXHAUSTIVE = 16
DEFAULT_NODE_BUDGET = 5_000_000


class OracleError(MarketError):
    """The oracle was asked for something it cannot deliver."""


@dataclass(frozen=True)
class OracleResult:
    welfare: float
    accepted: np.ndarray
    method: str  # "exhaustive" | "branch-and-bound" | "lp-upper-bound"
    exact: bool
    upper_bound: float | None = None
    nodes_explored: int = 0


def adjusted_profits(instance) -> np.ndarray:
    """Welfare contribution of each tenant if served: valuation minus bundle cost."""
    return instance.valuations - instance.demands @ instance.unit_costs


def _exhaustive(profits: np.ndarray, demands: np.ndarray) -> tuple[float, int]:
    m = len(profits)
    positions = np.arange(m, dtype=np.int64)
    best_value = 0.0
    best_mask = 0
    for lo in range(0, 1 << m, _EXHAUSTIVE_CHUNK):
        hi = min(lo + _EXHAUSTIVE_CHUNK, 1 << m)
        codes = np.arange(lo, hi, dtype=np.int64)
        bits = ((codes[:, None] >> positions) & 1).astype(float)
        feasible = (bits @ demands <= CAPACITY + FEASIBILITY_EPS).all(axis=1)
        values = bits @ profits
        values[~feasible] = -np.inf
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = float(values[k])
            best_mask = int(codes[k])
    return best_value, best_mask


def _fractional_tail(start: int, cap: float, prefix_p, prefix_a, dens, m: int) -> float:
    """Upper bound on the profit of items ``start..`` within aggregate capacity ``cap``.

    Items are pre-sorted by profit per unit of aggregate demand, so the greedy
    fractional fill is the optimum of the single-constraint relaxation.
    """
    target = prefix_a[start] + cap
    t = int(np.searchsorted(prefix_a, target, side="right")) - 1
    if t >= m:
        return float(prefix_p[m] - prefix_p[start])
    bound = float(prefix_p[t] - prefix_p[start])
    leftover = target - prefix_a[t]
    if leftover > 0 and np.isfinite(dens[t]):
        bound += float(leftover * dens[t])
    return bound


def _branch_and_bound(
    profits: np.ndarray, demands: np.ndarray, node_budget: int
) -> tuple[float, int, int, bool]:
    m, resources = demands.shape
    aggregate = demands.sum(axis=1)
    with np.errstate(divide="ignore"):
        density = np.where(aggregate > 0, profits / aggregate, np.inf)
    order = np.argsort(-density, kind="stable")
    profits = profits[order]
    demands = demands[order]
    aggregate = aggregate[order]
    density = density[order]
    prefix_p = np.concatenate(([0.0], np.cumsum(profits)))
    prefix_a = np.concatenate(([0.0], np.cumsum(aggregate)))
    rows = [tuple(r) for r in demands.tolist()]
    profit_list = profits.tolist()

    best_value = 0.0
    best_mask = 0
    nodes = 0
    exhausted = False
    full = (CAPACITY,) * resources
    stack: list[tuple[int, float, tuple[float, ...], int]] = [(0, 0.0, full, 0)]
    while stack:
        depth, value, remaining, mask = stack.pop()
        nodes += 1
        if value > best_value:
            best_value = value
            best_mask = mask
        if depth == m:
            continue
        if nodes >= node_budget:
            exhausted = True
            break
        cap = sum(remaining)
        bound = value + _fractional_tail(depth, cap, prefix_p, prefix_a, density, m)
        if bound <= best_value + 1e-12 * max(1.0, abs(best_value)):
            continue
        stack.append((depth + 1, value, remaining, mask))
        row = rows[depth]
        if all(r + FEASIBILITY_EPS >= d for r, d in zip(remaining, row)):
            taken = tuple(r - d for r, d in zip(remaining, row))
            stack.append((depth + 1, value + profit_list[depth], taken, mask | (1 << depth)))

    # translate the mask over sorted positions back to pre-sort item indices
    chosen = np.zeros(m, dtype=bool)
    for pos in range(m):
        if best_mask >> pos & 1:
            chosen[order[pos]] = True
    packed = 0
    for idx in np.flatnonzero(chosen):
        packed |= 1 << int(idx)
    return best_value, packed, nodes, exhausted


def offline_exact(
    instance,
    method: str = "auto",
    node_budget: int = DEFAULT_NODE_BUDGET,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
) -> OracleResult:
    """Maximize offline welfare exactly (or report the best found plus a bound).

    Tenants whose adjusted profit is not positive, or whose demand cannot fit
    an empty market, can never help and are dropped before the search.
    """
    if method not in ("auto", "exhaustive", "branch-and-bound"):
        raise OracleError(f"unknown oracle method {method!r}")
    n = instance.tenant_count
    accepted = np.zeros(n, dtype=bool)
    if n == 0:
        return OracleResult(0.0, accepted, "exhaustive", True)
    profits = adjusted_profits(instance)
    viable = (profits > 0) & (instance.demands <= CAPACITY + FEASIBILITY_EPS).all(axis=1)
    index = np.flatnonzero(viable)
    m = len(index)
    if m == 0:
        return OracleResult(0.0, accepted, "exhaustive" if method != "branch-and-bound" else method, True)
    if method == "auto":
        method = "exhaustive" if m <= _AUTO_EXHAUSTIVE else "branch-and-bound"
    if method == "exhaustive":
        if m > exhaustive_limit:
            raise OracleError(
                f"{m} viable tenants exceed the exhaustive enumeration limit of {exhaustive_limit}"
            )
        value, mask = _exhaustive(profits[index], instance.demands[index])
        nodes = 1 << m
        exhausted = False
    else:
        value, mask, nodes, exhausted = _branch_and_bound(profits[index], instance.demands[index], node_budget)
    for pos in range(m):
        if mask >> pos & 1:
            accepted[index[pos]] = True
    welfare = float(profits[accepted].sum()) if accepted.any() else 0.0
    if exhausted:
        return OracleResult(
            welfare, accepted, method, exact=False, upper_bound=lp_upper_bound(instance), nodes_explored=nodes
        )
    return OracleResult(welfare, accepted, method, exact=True, nodes_explored=nodes)


def lp_upper_bound(instance) -> float:
    """Optimum of the fractional relaxation; never below the exact optimum."""
    n = instance.tenant_count
    if n == 0:
        return 0.0
    profits = adjusted_profits(instance)
    if not (profits > 0).any():
        return 0.0
    result = linprog(
        c=-profits,
        A_ub=instance.demands.T,
        b_ub=np.full(instance.resource_count, CAPACITY),
        bounds=[(0.0, 1.0)] * n,
        method="highs",
    )
    if not result.success:
        raise OracleError(f"LP relaxation unexpectedly failed: {result.message}")
    return float(-result.fun)
