"""Seller side of the simulated marketplace.

Each user owns one true location and a privacy valuation: the price at which
they hand over the exact point.  Paying less buys a Gaussian-noised copy
whose noise scale grows with the valuation-to-price ratio; paying the full
valuation (or more) buys the unperturbed point.  Every sale is recorded in a
purchase ledger so strategies can account for spend.

Users and pricing parameters are immutable and shareable across workers; a
ledger and RNG belong to exactly one strategy run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geo import GeoPoint

__all__ = [
    "User",
    "PricingParams",
    "Observation",
    "PurchaseLedger",
    "ValuationDistribution",
    "noise_sigma",
    "sample_valuation",
    "assign_valuations",
    "sell",
]


@dataclass(frozen=True, slots=True)
class User:
    """A data seller: identifier, true location, and ask price for exact data."""

    id: int
    true_location: GeoPoint
    valuation: float

    def __post_init__(self) -> None:
        if not self.valuation > 0:
            raise ValueError(f"valuation must be positive, got {self.valuation}")


@dataclass(frozen=True, slots=True)
class PricingParams:
    """Price-to-noise conversion parameters.

    sigma_scale maps the valuation/price ratio to a noise standard deviation
    in meters; the default of 20 puts the cheapest meaningful purchases in
    the range of real-world positioning noise (GPS, Wi-Fi, cell towers).
    """

    sigma_scale: float = 20.0

    def __post_init__(self) -> None:
        if not self.sigma_scale > 0:
            raise ValueError("sigma_scale must be positive")


class Observation(NamedTuple):
    """One sold data point: noisy location, its noise level, and the price paid."""

    user_id: int
    z: GeoPoint
    sigma: float
    price_paid: float


class PurchaseLedger:
    """Ordered record of (user_id, price, sigma) purchases with a running total."""

    __slots__ = ("entries", "total_spent")

    def __init__(self) -> None:
        self.entries: list[tuple[int, float, float]] = []
        self.total_spent: float = 0.0

    def record(self, user_id: int, price: float, sigma: float) -> None:
        self.entries.append((user_id, price, sigma))
        self.total_spent += price

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, slots=True)
class ValuationDistribution:
    """Valuation law: privacy level and point sensitivity are independent
    Uniform(0, scale) draws and the valuation is their product, so the
    support is (0, scale^2) with mean (scale/2)^2."""

    scale: float = 3.0

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def noise_sigma(valuation: float, price: float, pricing: PricingParams) -> float:
    """Noise standard deviation for buying a point at `price`.

    Returns (valuation / price) * sigma_scale while the price is below the
    valuation, and 0 once the price reaches it: paying the full ask yields
    the exact point.  Strictly decreasing in price on (0, valuation).
    """
    if price <= 0:
        raise ValueError(f"price must be positive, got {price}")
    if price >= valuation:
        return 0.0
    return (valuation / price) * pricing.sigma_scale


def sample_valuation(dist: ValuationDistribution, rng: np.random.Generator) -> float:
    """Draw one valuation as the product of two Uniform(0, scale) samples.

    A zero product (measure-zero, but possible in floating point) is
    resampled so the positivity invariant on User always holds.
    """
    d = dist.scale
    while True:
        value = rng.uniform(0.0, d) * rng.uniform(0.0, d)
        if value > 0.0:
            return value


def assign_valuations(
    points: list[tuple[int, GeoPoint]],
    dist: ValuationDistribution,
    rng: np.random.Generator,
) -> list[User]:
    """Build User records for (id, location) pairs, sampling valuations in
    ascending id order from a single stream (deterministic per seed)."""
    return [
        User(uid, loc, sample_valuation(dist, rng))
        for uid, loc in sorted(points, key=lambda t: t[0])
    ]


def sell(
    user: User,
    price: float,
    pricing: PricingParams,
    rng: np.random.Generator,
    ledger: PurchaseLedger,
) -> Observation:
    """Sell the user's point at `price`, recording the purchase.

    The noise level follows noise_sigma; each sale draws fresh independent
    per-axis Gaussian noise, so repeated sales of the same point are
    independent observations.  The buyer pays the quoted price even when it
    exceeds the valuation (in which case the exact point is returned).
    """
    if price <= 0:
        raise ValueError(f"price must be positive, got {price}")
    sigma = noise_sigma(user.valuation, price, pricing)
    if sigma > 0.0:
        eta = rng.standard_normal(2)
        z = GeoPoint(
            user.true_location.x + sigma * eta[0],
            user.true_location.y + sigma * eta[1],
        )
    else:
        z = user.true_location
    ledger.record(user.id, price, sigma)
    return Observation(user.id, z, sigma, price)
