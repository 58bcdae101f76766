"""Economic primitives of the slicing market.

Every resource has unit capacity, a linear operating cost, and an admissible
band of earning densities (tenant valuation per unit of resource).  This
module holds the cost / profit / conjugate functions and the welfare
accounting that every algorithm in the package shares.

Costs beyond capacity are infinite.  Infinity is modelled by dedicated
sentinels (:data:`PLUS_INF`, :data:`MINUS_INF`) that order correctly against
real numbers but refuse arithmetic, so an over-capacity value can never leak
silently into a welfare sum.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

CAPACITY = 1.0
FEASIBILITY_EPS = 1e-9


class MarketError(Exception):
    """Base class for structured market-model errors."""


class SetupError(MarketError):
    """A market setup violates its defining inequalities."""


class InfeasibleAllocationError(MarketError):
    """An allocation exceeds the capacity of at least one resource."""

    def __init__(self, resource: int, utilization: float):
        self.resource = resource
        self.utilization = utilization
        super().__init__(
            f"resource {resource} over capacity: utilization {utilization!r} "
            f"exceeds {CAPACITY} + {FEASIBILITY_EPS}"
        )


class PaymentError(MarketError):
    """A payment vector is inconsistent with an allocation."""


class _Infinity:
    """Signed infinite value that compares against reals but refuses arithmetic.

    ``PLUS_INF`` is larger than every real number, ``MINUS_INF`` smaller.
    Any attempt to mix one with finite arithmetic raises ``TypeError`` instead
    of propagating a NaN or an unbounded float through a welfare sum.
    """

    __slots__ = ("_sign",)

    def __init__(self, sign: int):
        self._sign = sign

    def _cmp_ok(self, other) -> bool:
        return isinstance(other, (_Infinity, numbers.Real))

    def __gt__(self, other):
        if isinstance(other, _Infinity):
            return self._sign > other._sign
        if isinstance(other, numbers.Real):
            return self._sign > 0
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, _Infinity):
            return self._sign < other._sign
        if isinstance(other, numbers.Real):
            return self._sign < 0
        return NotImplemented

    def __ge__(self, other):
        if not self._cmp_ok(other):
            return NotImplemented
        return self == other or self > other

    def __le__(self, other):
        if not self._cmp_ok(other):
            return NotImplemented
        return self == other or self < other

    def __eq__(self, other):
        return isinstance(other, _Infinity) and self._sign == other._sign

    def __hash__(self):
        return hash(("slicemarket-infinity", self._sign))

    def _refuse(self, *_args):
        raise TypeError(
            "infinite cost/profit sentinel cannot take part in arithmetic; "
            "check feasibility before summing"
        )

    __add__ = __radd__ = __sub__ = __rsub__ = _refuse
    __mul__ = __rmul__ = __truediv__ = __rtruediv__ = _refuse
    __neg__ = __pos__ = __abs__ = _refuse
    __float__ = _refuse

    def __repr__(self):
        return "PLUS_INF" if self._sign > 0 else "MINUS_INF"


PLUS_INF = _Infinity(1)
MINUS_INF = _Infinity(-1)


def is_finite(value) -> bool:
    """True when ``value`` is a real number rather than an infinity sentinel."""
    return not isinstance(value, _Infinity)


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(np.asarray(array, dtype=float))
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MarketSetup:
    """Static market description: per-resource unit costs and density bands.

    ``unit_costs[c]`` is the linear operating cost of resource ``c``,
    ``price_floors[c]`` / ``price_caps[c]`` bound the earning densities of
    admissible tenants.  Capacity is normalized to 1 per resource.
    """

    unit_costs: np.ndarray
    price_floors: np.ndarray
    price_caps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "unit_costs", _readonly(self.unit_costs))
        object.__setattr__(self, "price_floors", _readonly(self.price_floors))
        object.__setattr__(self, "price_caps", _readonly(self.price_caps))
        shapes = {self.unit_costs.shape, self.price_floors.shape, self.price_caps.shape}
        if len(shapes) != 1 or self.unit_costs.ndim != 1:
            raise SetupError("unit_costs, price_floors and price_caps must be 1-D and equally long")
        if self.resource_count < 1:
            raise SetupError("a market needs at least one resource")

    @property
    def resource_count(self) -> int:
        return self.unit_costs.shape[0]

    def validate(self) -> None:
        """Check 0 < unit cost < price floor <= price cap for every resource."""
        for c in range(self.resource_count):
            q, lo, hi = self.unit_costs[c], self.price_floors[c], self.price_caps[c]
            if not q > 0:
                raise SetupError(f"resource {c}: 0 < q_c violated (q={q!r})")
            if not q < lo:
                raise SetupError(f"resource {c}: q_c < price floor violated (q={q!r}, floor={lo!r})")
            if not lo <= hi:
                raise SetupError(f"resource {c}: price floor <= price cap violated (floor={lo!r}, cap={hi!r})")

    @classmethod
    def from_instance(cls, instance) -> "MarketSetup":
        setup = cls(
            unit_costs=instance.unit_costs,
            price_floors=instance.price_floors,
            price_caps=instance.price_caps,
        )
        setup.validate()
        return setup


@dataclass(frozen=True)
class Allocation:
    """Accept/reject decisions plus the per-resource utilization they induce."""

    accepted: np.ndarray
    utilization: np.ndarray

    def __post_init__(self):
        accepted = np.asarray(self.accepted, dtype=bool)
        accepted.setflags(write=False)
        object.__setattr__(self, "accepted", accepted)
        object.__setattr__(self, "utilization", _readonly(self.utilization))
        for c, y in enumerate(self.utilization):
            if y > CAPACITY + FEASIBILITY_EPS:
                raise InfeasibleAllocationError(c, float(y))
            if y < 0:
                raise InfeasibleAllocationError(c, float(y))

    @classmethod
    def empty(cls, tenant_count: int, resource_count: int) -> "Allocation":
        return cls(np.zeros(tenant_count, dtype=bool), np.zeros(resource_count))

    @classmethod
    def from_decisions(cls, instance, accepted) -> "Allocation":
        accepted = np.asarray(accepted, dtype=bool)
        if accepted.shape != (instance.tenant_count,):
            raise MarketError(
                f"decision vector has shape {accepted.shape}, expected ({instance.tenant_count},)"
            )
        utilization = accepted.astype(float) @ instance.demands
        return cls(accepted, utilization)


def _check_resource(setup: MarketSetup, c: int) -> None:
    if not 0 <= c < setup.resource_count:
        raise SetupError(f"resource index {c} out of range [0, {setup.resource_count})")


def cost(setup: MarketSetup, c: int, y: float):
    """Operating cost of renting out ``y`` units of resource ``c``.

    Linear in ``y`` on the capacity interval, infinite beyond it.
    """
    _check_resource(setup, c)
    if y < 0:
        raise MarketError(f"utilization must be non-negative, got {y!r}")
    if y > CAPACITY:
        return PLUS_INF
    return float(setup.unit_costs[c] * y)


def conjugate(setup: MarketSetup, c: int, price: float) -> float:
    """Maximum profit of resource ``c`` at a posted price.

    Zero while the price does not cover the unit cost, ``price - q_c`` above.
    """
    _check_resource(setup, c)
    if price < 0:
        raise MarketError(f"price must be non-negative, got {price!r}")
    q = float(setup.unit_costs[c])
    return float(price - q) if price > q else 0.0


def profit(setup: MarketSetup, c: int, price: float, y: float):
    """Revenue minus cost of renting ``y`` units of resource ``c`` at ``price``."""
    _check_resource(setup, c)
    if price < 0:
        raise MarketError(f"price must be non-negative, got {price!r}")
    if y < 0:
        raise MarketError(f"utilization must be non-negative, got {y!r}")
    if y > CAPACITY:
        return MINUS_INF
    return float(price * y - setup.unit_costs[c] * y)


def _check_allocation(setup: MarketSetup, instance, allocation: Allocation) -> None:
    if allocation.accepted.shape != (instance.tenant_count,):
        raise MarketError("allocation does not match the instance tenant count")
    if allocation.utilization.shape != (setup.resource_count,):
        raise MarketError("allocation does not match the market resource count")
    expected = allocation.accepted.astype(float) @ instance.demands
    if not np.allclose(allocation.utilization, expected, atol=1e-6):
        raise MarketError("allocation utilization is inconsistent with the instance demands")
    for c, y in enumerate(allocation.utilization):
        if y > CAPACITY + FEASIBILITY_EPS:
            raise InfeasibleAllocationError(c, float(y))


def social_welfare(setup: MarketSetup, instance, allocation: Allocation) -> float:
    """Total valuation of the served tenants minus operating costs.

    Payments are internal transfers between tenants and the operator, so any
    payment vector yields the same welfare.
    """
    _check_allocation(setup, instance, allocation)
    x = allocation.accepted.astype(float)
    value = float(instance.valuations @ x)
    run_cost = float(setup.unit_costs @ allocation.utilization)
    return value - run_cost


def utilities(setup: MarketSetup, instance, allocation: Allocation, payments) -> tuple[float, np.ndarray]:
    """Split welfare into the operator utility and per-tenant utilities.

    Tenant ``n`` nets ``valuation - payment`` when served and 0 otherwise; the
    operator collects all payments and bears the operating costs.
    """
    _check_allocation(setup, instance, allocation)
    payments = np.asarray(payments, dtype=float)
    if payments.shape != allocation.accepted.shape:
        raise PaymentError("payments vector must have one entry per tenant")
    if (payments < 0).any():
        tenant = int(np.argmax(payments < 0))
        raise PaymentError(f"tenant {tenant}: negative payment {payments[tenant]!r}")
    stray = payments[~allocation.accepted]
    if (stray != 0).any():
        tenant = int(np.flatnonzero(~allocation.accepted)[np.argmax(stray != 0)])
        raise PaymentError(f"payment attached to rejected tenant {tenant}")
    tenant_utils = (instance.valuations - payments) * allocation.accepted
    operator = float(payments.sum() - setup.unit_costs @ allocation.utilization)
    return operator, tenant_utils
