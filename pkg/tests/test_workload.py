"""Workload generator: determinism, invariants, population statistics."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from slicemarket.workload import (
    MIN_DEMAND,
    GenConfig,
    Instance,
    WorkloadError,
    derive_bounds,
    generate_instance,
    generate_population,
    validate_instance,
)


class TestGenConfig:
    def test_defaults_resolve(self):
        cfg = GenConfig(tenant_count=100)
        assert cfg.resolved_demand_mean == pytest.approx(0.01)
        assert cfg.resolved_demand_std == pytest.approx(1e-4)

    def test_overrides(self):
        cfg = GenConfig(demand_mean=0.02, demand_std=0.005)
        assert cfg.resolved_demand_mean == 0.02
        assert cfg.resolved_demand_std == 0.005

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"tenant_count": 0},
            {"resource_count": 0},
            {"demand_mean": 0.0},
            {"free_user_fraction": 1.0},
            {"participation": 0.0},
            {"unit_cost_range": (0.2, 1.0)},
            {"pay_level_range": (3.0, 2.0)},
        ],
    )
    def test_invalid_configs(self, kwargs):
        with pytest.raises(WorkloadError):
            GenConfig(**kwargs)

    def test_dict_round_trip(self):
        cfg = GenConfig(tenant_count=7, participation=0.8, seed=13)
        assert GenConfig.from_dict(cfg.to_dict()) == cfg


class TestGenerateInstance:
    def test_seeded_determinism(self):
        cfg = GenConfig(tenant_count=20, resource_count=3, seed=77)
        a = generate_instance(cfg)
        b = generate_instance(cfg)
        assert (a.demands == b.demands).all()
        assert (a.valuations == b.valuations).all()
        assert (a.price_floors == b.price_floors).all()
        assert (a.unit_costs == b.unit_costs).all()

    def test_single_tenant_invariants(self):
        inst = generate_instance(GenConfig(tenant_count=1, resource_count=1, seed=0))
        assert inst.demands[0, 0] > MIN_DEMAND
        e = inst.valuations[0] / inst.demands[0, 0]
        assert inst.price_floors[0] <= e <= inst.price_caps[0]
        assert 0 < inst.unit_costs[0] < inst.price_floors[0]

    def test_mean_demand_matches_configured_sampler(self):
        # the sampler is a normal resampled until above the demand floor, so
        # the reference mean is the truncated normal's, not the raw mean
        cfg = GenConfig(tenant_count=100, resource_count=3, seed=11)
        inst = generate_instance(cfg)
        mu, sigma = cfg.resolved_demand_mean, cfg.resolved_demand_std
        a = (MIN_DEMAND - mu) / sigma
        expected = stats.truncnorm.mean(a, np.inf, loc=mu, scale=sigma)
        expected_std = stats.truncnorm.std(a, np.inf, loc=mu, scale=sigma)
        stderr = expected_std / np.sqrt(inst.demands.size)
        assert abs(inst.demands.mean() - expected) <= 3 * stderr

    def test_generated_instances_always_validate(self, rng):
        for _ in range(300):
            cfg = GenConfig(
                tenant_count=int(rng.integers(1, 30)),
                resource_count=int(rng.integers(1, 6)),
                density_margin=float(rng.choice([0.0, 0.1])),
                participation=float(rng.uniform(0.4, 1.0)) if rng.random() < 0.3 else None,
                seed=int(rng.integers(0, 2**32)),
            )
            assert validate_instance(generate_instance(cfg)) == []

    def test_median_density_normalized(self):
        inst = generate_instance(GenConfig(tenant_count=50, resource_count=2, seed=3))
        dens = inst.densities()
        assert np.nanmedian(dens) == pytest.approx(1.0, rel=1e-9)

    def test_custom_payment_function(self):
        doubled = generate_instance(GenConfig(tenant_count=5, seed=4), payment_fn=lambda p: 2 * p)
        identity = generate_instance(GenConfig(tenant_count=5, seed=4))
        # a uniform payment scaling cancels in the normalized valuations
        assert np.allclose(doubled.valuations, identity.valuations)

    def test_zero_payment_function_rejected(self):
        with pytest.raises(WorkloadError, match="degenerate"):
            generate_instance(GenConfig(tenant_count=3, seed=1), payment_fn=lambda p: 0.0)


class TestPopulation:
    def test_free_user_fraction(self):
        cfg = GenConfig(tenant_count=40, resource_count=1, seed=21)
        _, privates = generate_population(cfg)
        total = sum(p.subscriber_count for p in privates)
        free = sum(p.free_count for p in privates)
        assert abs(free / total - 0.4) <= 0.05

    def test_pyramid_monotone_in_aggregate(self):
        counts = np.zeros(6)
        for seed in range(100):
            _, privates = generate_population(GenConfig(tenant_count=5, resource_count=1, seed=seed))
            for p in privates:
                for k, c in enumerate(p.tier_counts):
                    counts[k] += c
        present = counts[counts > 0]
        assert all(b <= a for a, b in zip(present, present[1:]))

    def test_paying_subscribers_always_present(self):
        # tiny subscriber pools with a large free share still produce buyers
        cfg = GenConfig(
            tenant_count=30, resource_count=1, subscriber_mean=2.0, subscriber_std=1.0,
            free_user_fraction=0.9, seed=5,
        )
        _, privates = generate_population(cfg)
        for p in privates:
            assert p.subscriber_count - p.free_count >= 1
            assert p.raw_valuation > 0

    def test_tier_counts_match_paying_subscribers(self):
        _, privates = generate_population(GenConfig(tenant_count=10, seed=9))
        for p in privates:
            assert sum(p.tier_counts) == p.subscriber_count - p.free_count


class TestDeriveBounds:
    def test_min_max(self):
        floors, caps = derive_bounds(np.array([[2.0], [2.5], [3.0]]))
        assert floors[0] == 2.0
        assert caps[0] == 3.0

    def test_single_value(self):
        floors, caps = derive_bounds(np.array([[5.0]]))
        assert floors[0] == caps[0] == 5.0

    def test_margin(self):
        floors, caps = derive_bounds(np.array([[2.0], [3.0]]), margin=0.1)
        assert floors[0] == pytest.approx(1.8)
        assert caps[0] == pytest.approx(3.3)

    def test_undemanded_resource_gets_global_range(self):
        dens = np.array([[2.0, np.nan], [4.0, np.nan]])
        floors, caps = derive_bounds(dens)
        assert floors[1] == 2.0
        assert caps[1] == 4.0

    def test_no_density_anywhere(self):
        with pytest.raises(WorkloadError):
            derive_bounds(np.full((2, 2), np.nan))


@given(
    lo=st.floats(0.5, 5.0),
    span=st.floats(0.0, 5.0),
    margin=st.floats(0.0, 0.5),
)
def test_derive_bounds_margin_property(lo, span, margin):
    hi = lo + span
    floors, caps = derive_bounds(np.array([[lo], [hi]]), margin=margin)
    assert floors[0] == pytest.approx((1 - margin) * lo)
    assert caps[0] == pytest.approx((1 + margin) * hi)
    assert floors[0] <= caps[0]


class TestValidateInstance:
    def test_clean_instance(self):
        assert validate_instance(generate_instance(GenConfig(tenant_count=10, seed=2))) == []

    def test_density_below_floor_detected(self):
        inst = generate_instance(GenConfig(tenant_count=5, resource_count=1, seed=2))
        floors = inst.price_floors.copy()
        floors[0] = float(np.nanmax(inst.densities())) * 1.01
        bad = Instance(inst.demands, inst.valuations, floors, inst.price_caps * 2, inst.unit_costs)
        codes = {v.code for v in validate_instance(bad)}
        assert "density-below-floor" in codes

    def test_cost_at_floor_detected(self):
        inst = generate_instance(GenConfig(tenant_count=5, resource_count=1, seed=2))
        costs = inst.unit_costs.copy()
        costs[0] = inst.price_floors[0]
        bad = Instance(inst.demands, inst.valuations, inst.price_floors, inst.price_caps, costs)
        codes = {v.code for v in validate_instance(bad)}
        assert "cost-at-floor" in codes
        report = [v for v in validate_instance(bad) if v.code == "cost-at-floor"][0]
        assert report.resource == 0

    def test_violations_are_data_not_errors(self):
        inst = generate_instance(GenConfig(tenant_count=3, resource_count=1, seed=6))
        bad = Instance(
            inst.demands, inst.valuations, inst.price_floors, inst.price_caps, -inst.unit_costs
        )
        problems = validate_instance(bad)
        assert problems
        assert all(str(v) for v in problems)


class TestSparseParticipation:
    def test_every_tenant_demands_something(self):
        cfg = GenConfig(tenant_count=40, resource_count=4, participation=0.4, seed=8)
        inst = generate_instance(cfg)
        assert ((inst.demands > 0).sum(axis=1) >= 1).all()
        assert (inst.demands == 0).any()

    def test_sparse_instances_validate(self):
        for seed in range(20):
            cfg = GenConfig(tenant_count=6, resource_count=5, participation=0.3, seed=seed)
            assert validate_instance(generate_instance(cfg)) == []


class TestInstanceIO:
    def test_json_round_trip(self, tmp_path):
        cfg = GenConfig(tenant_count=12, resource_count=2, participation=0.9, seed=31)
        inst = generate_instance(cfg)
        path = inst.save(tmp_path / "instance.json")
        loaded = Instance.load(path)
        assert (loaded.demands == inst.demands).all()
        assert (loaded.valuations == inst.valuations).all()
        assert (loaded.price_floors == inst.price_floors).all()
        assert (loaded.price_caps == inst.price_caps).all()
        assert (loaded.unit_costs == inst.unit_costs).all()
        assert loaded.seed == inst.seed
        assert loaded.config == cfg

    def test_arrays_read_only(self):
        inst = generate_instance(GenConfig(tenant_count=3, seed=1))
        with pytest.raises(ValueError):
            inst.demands[0, 0] = 5.0
