"""Baseline algorithms: genetic heuristic, utility-bid auction, myopic, random."""

import numpy as np
import pytest

from slicemarket.baselines import (
    GaParams,
    MyopicPricing,
    ga_heuristic,
    myopic_slicing,
    random_slicing,
    utility_bid_auction,
)
from slicemarket.market import Allocation, MarketSetup, social_welfare
from slicemarket.oracle import offline_exact
from slicemarket.pricing import build_schedule
from slicemarket.protocol import run_session
from slicemarket.workload import GenConfig, Instance, generate_instance

from conftest import manual_instance


class TestGaHeuristic:
    def test_single_profitable_tenant(self):
        inst = manual_instance([[0.4]], [1.0], [0.5])
        welfare, accepted = ga_heuristic(inst, GaParams(population=10, generations=5), seed=0)
        assert accepted[0]
        assert welfare == pytest.approx(1.0 - 0.2)

    def test_nothing_fits(self):
        inst = Instance([[1.4], [1.2]], [2.0, 2.0], [1.0], [3.0], [0.5])
        welfare, accepted = ga_heuristic(inst, seed=0)
        assert welfare == 0.0
        assert not accepted.any()

    def test_always_feasible(self, rng):
        params = GaParams(population=20, generations=10)
        for _ in range(20):
            cfg = GenConfig(
                tenant_count=int(rng.integers(2, 30)),
                resource_count=int(rng.integers(1, 4)),
                seed=int(rng.integers(0, 2**32)),
            )
            inst = generate_instance(cfg)
            welfare, accepted = ga_heuristic(inst, params, seed=int(rng.integers(0, 2**32)))
            Allocation.from_decisions(inst, accepted)  # raises when infeasible
            assert welfare <= offline_exact(inst).welfare + 1e-9

    def test_seeded_determinism(self):
        inst = generate_instance(GenConfig(tenant_count=15, seed=4))
        a = ga_heuristic(inst, GaParams(population=30, generations=20), seed=11)
        b = ga_heuristic(inst, GaParams(population=30, generations=20), seed=11)
        assert a[0] == b[0]
        assert (a[1] == b[1]).all()

    def test_near_optimal_on_small_instances(self, rng):
        hits = 0
        for _ in range(100):
            cfg = GenConfig(
                tenant_count=int(rng.integers(5, 13)),
                resource_count=int(rng.integers(1, 4)),
                seed=int(rng.integers(0, 2**32)),
            )
            inst = generate_instance(cfg)
            optimum = offline_exact(inst, method="exhaustive").welfare
            welfare, _ = ga_heuristic(inst, seed=int(rng.integers(0, 2**32)))
            if optimum <= 0 or welfare >= 0.95 * optimum:
                hits += 1
        assert hits >= 90

    def test_param_validation(self):
        with pytest.raises(ValueError):
            GaParams(population=1)
        with pytest.raises(ValueError):
            GaParams(elitism=100)


class TestUtilityBidAuction:
    def test_two_tenant_rounds(self):
        # round 1: both bid, tenant 1 has the larger increment and wins;
        # round 2: tenant 0 no longer fits, so nobody bids
        inst = manual_instance([[0.6], [0.6]], [1.2, 1.5], [0.5])
        result = utility_bid_auction(inst)
        assert list(result.accepted) == [False, True]
        assert result.welfare == pytest.approx(1.2)
        assert result.payments[1] == pytest.approx(1.5)
        assert result.rounds == 1
        assert result.bids_submitted == 2

    def test_no_positive_surplus(self):
        inst = manual_instance([[0.5]], [0.3], [0.9])
        # valuation below the bundle cost: 0.3 < 0.5 * 0.9? no -> make it so
        bad = Instance(inst.demands, inst.valuations, inst.price_floors, inst.price_caps, [0.59])
        assert utility_bid_auction(bad).welfare == pytest.approx(0.3 - 0.5 * 0.59)
        worse = Instance(inst.demands, np.array([0.2]), inst.price_floors, inst.price_caps, [0.5])
        result = utility_bid_auction(worse)
        assert not result.accepted.any()
        assert result.welfare == 0.0

    def test_disjoint_resources_all_accepted(self):
        demands = np.array([[0.8, 0.0], [0.0, 0.8]])
        inst = manual_instance(demands, [1.0, 1.2], [0.1, 0.1])
        result = utility_bid_auction(inst)
        assert result.accepted.all()
        assert result.rounds == 2

    def test_rounds_bounded_by_tenants(self, rng):
        for _ in range(10):
            cfg = GenConfig(tenant_count=int(rng.integers(1, 40)), seed=int(rng.integers(0, 2**32)))
            inst = generate_instance(cfg)
            result = utility_bid_auction(inst)
            assert result.rounds <= inst.tenant_count
            Allocation.from_decisions(inst, result.accepted)


class TestMyopicSlicing:
    def test_opening_price_is_zero(self):
        inst = generate_instance(GenConfig(tenant_count=5, resource_count=2, seed=3))
        result = myopic_slicing(inst)
        first = result.ledger.transcript[0]
        assert first.quote == (0.0, 0.0)
        # any positive valuation accepts a zero quote
        assert first.accepted == 1

    def test_price_near_capacity(self):
        setup = MarketSetup([0.5, 0.5], [1.0, 2.0], [2.0, 3.0])
        pricing = MyopicPricing.from_setup(setup)
        assert pricing.price_at(0, 1.0) == pytest.approx((1.0 + 2.0) / 2)
        assert pricing.price_at(1, 1.0) == pytest.approx((2.0 + 3.0) / 2)
        from slicemarket.market import PLUS_INF

        assert pricing.price_at(0, 1.1) is PLUS_INF

    def test_session_respects_capacity(self, rng):
        for _ in range(20):
            cfg = GenConfig(
                tenant_count=int(rng.integers(1, 40)),
                resource_count=int(rng.integers(1, 4)),
                seed=int(rng.integers(0, 2**32)),
            )
            inst = generate_instance(cfg)
            result = myopic_slicing(inst)
            assert all(y <= 1.0 for y in result.ledger.utilization)


class TestRandomSlicing:
    def test_seeded_determinism(self):
        inst = generate_instance(GenConfig(tenant_count=20, seed=6))
        a = random_slicing(inst, seed=42)
        b = random_slicing(inst, seed=42)
        assert a[0] == b[0]
        assert (a[1] == b[1]).all()

    def test_all_rejecting_coins(self):
        inst = generate_instance(GenConfig(tenant_count=4, resource_count=1, seed=2))
        for seed in range(200):
            coins = np.random.default_rng(seed).integers(0, 2, size=4)
            if not coins.any():
                welfare, accepted = random_slicing(inst, seed=seed)
                assert welfare == 0.0
                assert not accepted.any()
                return
        pytest.fail("no all-zero coin sequence among the probed seeds")

    def test_capacity_never_exceeded(self, rng):
        for _ in range(10):
            inst = generate_instance(GenConfig(tenant_count=100, seed=int(rng.integers(0, 2**32))))
            _, accepted = random_slicing(inst, seed=int(rng.integers(0, 2**32)))
            Allocation.from_decisions(inst, accepted)


def test_sandwich_ordering(rng):
    """Every heuristic stays below the exact optimum on the same instance."""
    from slicemarket.oracle import lp_upper_bound

    for _ in range(15):
        cfg = GenConfig(
            tenant_count=int(rng.integers(4, 14)),
            resource_count=int(rng.integers(1, 4)),
            seed=int(rng.integers(0, 2**32)),
        )
        inst = generate_instance(cfg)
        setup = MarketSetup.from_instance(inst)
        schedule = build_schedule(setup)
        order = rng.permutation(inst.tenant_count)
        exact = offline_exact(inst).welfare
        bound = lp_upper_bound(inst)

        session = run_session(setup, schedule, inst, order)
        values = {
            "posted": social_welfare(setup, inst, session.allocation),
            "myopic": social_welfare(setup, inst, myopic_slicing(inst, order).allocation),
            "auction": utility_bid_auction(inst).welfare,
            "genetic": ga_heuristic(inst, GaParams(population=20, generations=15), seed=1)[0],
            "random": random_slicing(inst, order, seed=7)[0],
        }
        for name, value in values.items():
            assert value <= exact + 1e-9, name
        assert exact <= bound + 1e-6


def test_posted_price_beats_random_at_defaults(rng):
    posted, random_ = [], []
    for _ in range(60):
        inst = generate_instance(GenConfig(seed=int(rng.integers(0, 2**32))))
        order = rng.permutation(inst.tenant_count)
        setup = MarketSetup.from_instance(inst)
        schedule = build_schedule(setup)
        session = run_session(setup, schedule, inst, order)
        posted.append(social_welfare(setup, inst, session.allocation))
        welfare, _ = random_slicing(inst, order, seed=int(rng.integers(0, 2**32)))
        random_.append(welfare)
    assert np.median(posted) >= np.median(random_)
