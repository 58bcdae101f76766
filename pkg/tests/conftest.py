import numpy as np
import pytest

from slicemarket.market import MarketSetup
from slicemarket.workload import Instance, derive_bounds


def random_setup(rng: np.random.Generator, resources: int | None = None) -> MarketSetup:
    c = resources if resources is not None else int(rng.integers(1, 10))
    floors = rng.uniform(0.5, 5.0, size=c)
    caps = floors * rng.uniform(1.0, 10.0, size=c)
    costs = floors * rng.uniform(0.05, 0.95, size=c)
    return MarketSetup(costs, floors, caps)


def manual_instance(demands, valuations, unit_costs, margin: float = 0.0) -> Instance:
    """Instance with bounds derived from the given demands/valuations."""
    demands = np.asarray(demands, dtype=float)
    valuations = np.asarray(valuations, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        densities = np.where(demands > 0, valuations[:, None] / demands, np.nan)
    floors, caps = derive_bounds(densities, margin)
    return Instance(demands, valuations, floors, caps, np.asarray(unit_costs, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
