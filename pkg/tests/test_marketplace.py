"""Seller-side tests: the price-to-noise rule, valuation sampling, sales."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geomarket.geo import GeoPoint
from geomarket.marketplace import (
    Observation,
    PricingParams,
    PurchaseLedger,
    User,
    ValuationDistribution,
    noise_sigma,
    sample_valuation,
    sell,
)

PRICING = PricingParams(20.0)


class TestNoiseSigma:
    def test_direct_substitution(self):
        assert noise_sigma(2.0, 1.0, PRICING) == 40.0

    def test_price_at_or_above_valuation_is_exact(self):
        assert noise_sigma(2.0, 3.0, PRICING) == 0.0
        assert noise_sigma(2.0, 2.0, PRICING) == 0.0

    def test_just_below_valuation_approaches_scale(self):
        sigma = noise_sigma(1.0, 1.0 - 1e-12, PRICING)
        assert sigma == pytest.approx(20.0, abs=1e-9)

    def test_rejects_nonpositive_price(self):
        with pytest.raises(ValueError):
            noise_sigma(2.0, 0.0, PRICING)
        with pytest.raises(ValueError):
            noise_sigma(2.0, -1.0, PRICING)

    @given(
        valuation=st.floats(1e-6, 1e3),
        r1=st.floats(1e-9, 1.0, exclude_max=True),
        r2=st.floats(1e-9, 1.0, exclude_max=True),
    )
    @settings(max_examples=300, deadline=None)
    def test_strictly_decreasing_in_price(self, valuation, r1, r2):
        q1, q2 = sorted((valuation * r1, valuation * r2))
        if q1 == q2 or q2 >= valuation or q1 <= 0:
            return
        assert noise_sigma(valuation, q1, PRICING) > noise_sigma(valuation, q2, PRICING)

    @given(v1=st.floats(0.1, 100.0), v2=st.floats(0.1, 100.0))
    @settings(max_examples=200, deadline=None)
    def test_strictly_increasing_in_valuation(self, v1, v2):
        lo, hi = sorted((v1, v2))
        if lo == hi:
            return
        price = 0.5 * lo  # below both valuations
        assert noise_sigma(lo, price, PRICING) < noise_sigma(hi, price, PRICING)


class TestSampleValuation:
    def test_support_bound(self):
        rng = np.random.default_rng(0)
        dist = ValuationDistribution(3.0)
        draws = [sample_valuation(dist, rng) for _ in range(5_000)]
        assert all(0.0 < v < 9.0 for v in draws)

    def test_unit_scale_below_one(self):
        rng = np.random.default_rng(1)
        dist = ValuationDistribution(1.0)
        assert all(sample_valuation(dist, rng) < 1.0 for _ in range(2_000))

    def test_empirical_mean(self):
        """Product of two independent Uniform(0, d) means is (d/2)^2."""
        rng = np.random.default_rng(2)
        a = rng.uniform(0.0, 3.0, 1_000_000) * rng.uniform(0.0, 3.0, 1_000_000)
        dist = ValuationDistribution(3.0)
        draws = np.array([sample_valuation(dist, rng) for _ in range(200_000)])
        assert a.mean() == pytest.approx(2.25, rel=0.01)
        assert draws.mean() == pytest.approx(2.25, rel=0.01)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            ValuationDistribution(0.0)


class TestSell:
    def _user(self, valuation=2.0):
        return User(7, GeoPoint(100.0, -50.0), valuation)

    def test_full_price_returns_exact_point(self):
        user = self._user()
        ledger = PurchaseLedger()
        obs = sell(user, 2.5, PRICING, np.random.default_rng(0), ledger)
        assert obs.z == user.true_location
        assert obs.sigma == 0.0
        assert obs.price_paid == 2.5
        assert ledger.entries == [(7, 2.5, 0.0)]

    def test_empirical_noise_std(self):
        user = self._user(valuation=2.0)
        rng = np.random.default_rng(3)
        ledger = PurchaseLedger()
        dx = np.empty(100_000)
        dy = np.empty(100_000)
        for i in range(100_000):
            obs = sell(user, 1.0, PRICING, rng, ledger)
            dx[i] = obs.z.x - user.true_location.x
            dy[i] = obs.z.y - user.true_location.y
        assert dx.std(ddof=1) == pytest.approx(40.0, rel=0.01)
        assert dy.std(ddof=1) == pytest.approx(40.0, rel=0.01)
        assert abs(np.corrcoef(dx, dy)[0, 1]) < 0.02

    def test_repeat_sales_draw_fresh_noise(self):
        user = self._user()
        rng = np.random.default_rng(4)
        ledger = PurchaseLedger()
        a = sell(user, 1.0, PRICING, rng, ledger)
        b = sell(user, 1.0, PRICING, rng, ledger)
        assert a.z != b.z

    def test_never_mutates_user(self):
        user = self._user()
        before = (user.true_location, user.valuation)
        sell(user, 0.5, PRICING, np.random.default_rng(5), PurchaseLedger())
        assert (user.true_location, user.valuation) == before

    def test_ledger_total_matches_prices(self):
        user = self._user()
        rng = np.random.default_rng(6)
        ledger = PurchaseLedger()
        prices = rng.uniform(0.01, 3.0, 500)
        for q in prices:
            sell(user, float(q), PRICING, rng, ledger)
        assert ledger.total_spent == pytest.approx(math.fsum(prices), abs=1e-9)
        assert ledger.total_spent == pytest.approx(
            math.fsum(p for _, p, _ in ledger.entries), abs=1e-9
        )

    def test_fixed_seed_is_bit_reproducible(self):
        user = self._user()

        def run():
            rng = np.random.default_rng(42)
            ledger = PurchaseLedger()
            return [sell(user, q, PRICING, rng, ledger) for q in (0.1, 0.2, 0.4, 0.8, 1.6)]

        assert run() == run()

    def test_rejects_nonpositive_price(self):
        with pytest.raises(ValueError):
            sell(self._user(), 0.0, PRICING, np.random.default_rng(0), PurchaseLedger())


class TestInvariantsOnTypes:
    def test_user_requires_positive_valuation(self):
        with pytest.raises(ValueError):
            User(1, GeoPoint(0.0, 0.0), 0.0)

    def test_pricing_requires_positive_scale(self):
        with pytest.raises(ValueError):
            PricingParams(0.0)

    def test_observation_fields(self):
        obs = Observation(3, GeoPoint(1.0, 2.0), 5.0, 0.25)
        assert obs.user_id == 3 and obs.sigma == 5.0 and obs.price_paid == 0.25
