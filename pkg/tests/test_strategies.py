"""Strategy behavior: ladders, terminals, degeneracies, dominance,
determinism and termination."""

import collections
import math

import numpy as np
import pytest

from geomarket.belief import ProfitModel, eip
from geomarket.geo import GeoPoint, Region
from geomarket.marketplace import Observation, PricingParams, User
from geomarket.strategies import (
    Decision,
    StrategyConfig,
    best_next_action,
    candidate_set,
    candidate_users,
    fmc_fraction_from_id,
    fmc_strategy_id,
    is_terminal,
    run_fmc,
    run_oracle,
    run_poi,
    run_sip,
    run_sip_t,
)

from oracles import ladder_bound, ladder_prices

PRICING = PricingParams(20.0)
REGION = Region(0.0, 0.0, 5_000.0)


def make_users(points, valuations):
    return [User(i, GeoPoint(*p), v) for i, (p, v) in enumerate(zip(points, valuations))]


def grid_of_users(n_inside, n_outside, valuation=2.0, region=REGION):
    """n_inside users on a lattice inside the region, n_outside far away."""
    users = []
    uid = 0
    cols = max(1, int(math.isqrt(max(n_inside, 1))))
    for i in range(n_inside):
        x = region.x_min + (0.5 + i % cols) * region.side / (cols + 1)
        y = region.y_min + (0.5 + i // cols) * region.side / (cols + 1)
        users.append(User(uid, GeoPoint(x, y), valuation))
        uid += 1
    for i in range(n_outside):
        users.append(
            User(uid, GeoPoint(region.x_max + 4_000.0 + 13.0 * i, region.y_min - 3_000.0), valuation)
        )
        uid += 1
    return users


class TestCandidateSet:
    def test_zero_margin_selects_region_members(self):
        users = grid_of_users(5, 4)
        assert candidate_set(users, REGION, 0.0) == [0, 1, 2, 3, 4]

    def test_infinite_margin_selects_everyone(self):
        users = grid_of_users(3, 3)
        assert candidate_set(users, REGION, math.inf) == [0, 1, 2, 3, 4, 5]

    def test_margin_box_geometry(self):
        users = [
            User(0, GeoPoint(-9_999.0, 2_500.0), 1.0),
            User(1, GeoPoint(-10_001.0, 2_500.0), 1.0),
            User(2, GeoPoint(2_500.0, 15_000.0), 1.0),
            User(3, GeoPoint(2_500.0, 15_001.0), 1.0),
        ]
        assert candidate_set(users, REGION, 10_000.0) == [0, 2]

    def test_ascending_id_order(self):
        users = list(reversed(grid_of_users(6, 0)))
        assert candidate_set(users, REGION, 0.0) == [0, 1, 2, 3, 4, 5]


class TestBestNextAction:
    def test_exhausted_at_valuation(self):
        obs = Observation(0, GeoPoint(100.0, 100.0), 0.0, 2.0)
        assert best_next_action(obs, 2.0, REGION, 100.0, PRICING, 2.0) is None

    def test_ladder_arithmetic(self):
        assert ladder_prices(0.001, 0.005, 2.0) == [0.002, 0.004, 0.005]

    def test_returned_price_is_ladder_argmax(self):
        rng = np.random.default_rng(20)
        for _ in range(100):
            z = GeoPoint(*rng.uniform(-3_000.0, 8_000.0, 2))
            sigma = float(rng.uniform(0.0, 5_000.0))
            price_paid = float(rng.uniform(0.0005, 0.5))
            valuation = price_paid * float(rng.uniform(1.01, 50.0))
            h = float(rng.uniform(1.2, 4.0))
            obs = Observation(0, z, sigma, price_paid)
            got = best_next_action(obs, valuation, REGION, 100.0, PRICING, h)
            ladder = ladder_prices(price_paid, valuation, h)
            values = [eip(obs, q, valuation, REGION, 100.0, PRICING) for q in ladder]
            best = max(values)
            first_best = ladder[values.index(best)]
            assert got is not None
            assert got[0] == first_best
            assert got[1] == pytest.approx(best, abs=1e-12)
            assert valuation in ladder and ladder.count(valuation) == 1

    def test_deep_inside_prefers_cheapest_rung(self):
        obs = Observation(0, GeoPoint(2_500.0, 2_500.0), 10.0, 0.001)
        got = best_next_action(obs, 0.016, REGION, 100.0, PRICING, 2.0)
        assert got is not None
        price, value = got
        assert price == 0.002  # all rungs cost-only, first rung wins
        assert value == pytest.approx(-0.002, abs=1e-9)


class TestTerminals:
    def test_exact_observation_is_terminal(self):
        assert is_terminal(Observation(0, GeoPoint(9e9, 9e9), 0.0, 1.0), REGION, 2.0)

    def test_center_inside_threshold(self):
        k = 2.0
        sigma = REGION.side / (2 * k) - 1.0
        obs = Observation(0, GeoPoint(2_500.0, 2_500.0), sigma, 1.0)
        assert is_terminal(obs, REGION, k)
        obs = Observation(0, GeoPoint(2_500.0, 2_500.0), sigma + 2.0, 1.0)
        assert not is_terminal(obs, REGION, k)

    def test_outside_threshold(self):
        z = GeoPoint(-100.0, 2_500.0)  # 100 m left of the region
        assert not is_terminal(Observation(0, z, 60.0, 1.0), REGION, 2.0)
        assert is_terminal(Observation(0, z, 45.0, 1.0), REGION, 2.0)

    def test_mixed_axes(self):
        # inside on x with wide margins, outside on y just barely
        z = GeoPoint(2_500.0, -10.0)
        assert not is_terminal(Observation(0, z, 45.0, 1.0), REGION, 2.0)
        z_far = GeoPoint(2_500.0, -100.0)
        assert is_terminal(Observation(0, z_far, 45.0, 1.0), REGION, 2.0)


class TestOracle:
    def test_break_even_cancels(self):
        model = ProfitModel.from_threshold(100.0, 4.0)
        users = grid_of_users(4, 2)
        run = run_oracle(users, REGION, model)
        assert run.decision is Decision.CANCEL
        assert run.spent == 0.0 and run.purchases == 0

    def test_one_above_opens(self):
        model = ProfitModel.from_threshold(100.0, 4.0)
        users = grid_of_users(5, 2)
        run = run_oracle(users, REGION, model)
        assert run.decision is Decision.OPEN

    def test_empty_region_cancels(self):
        model = ProfitModel.from_threshold(100.0, 4.0)
        run = run_oracle(grid_of_users(0, 3), REGION, model)
        assert run.decision is Decision.CANCEL


class TestSIP:
    def test_zero_candidates_cancels_with_zero_spend(self):
        model = ProfitModel.from_threshold(100.0, 4.0)
        cfg = StrategyConfig(candidate_margin=1_000.0)
        run = run_sip([], REGION, model, PRICING, cfg, np.random.default_rng(0))
        assert run.decision is Decision.CANCEL
        assert run.spent == 0.0

    def test_exact_data_degeneracy_matches_oracle(self):
        """With every valuation below the starting price, exploration buys
        exact points and the decision reduces to the ground-truth rule."""
        cfg = StrategyConfig(start_price=0.001, candidate_margin=8_000.0)
        rng_master = np.random.default_rng(21)
        for trial in range(20):
            n_in = int(rng_master.integers(0, 12))
            n_out = int(rng_master.integers(0, 12))
            n0 = float(rng_master.integers(1, 10))
            users = grid_of_users(n_in, n_out, valuation=0.0009)
            model = ProfitModel.from_threshold(100.0, n0)
            sip = run_sip(users, REGION, model, PRICING, cfg, np.random.default_rng(trial))
            oracle = run_oracle(users, REGION, model)
            assert sip.decision == oracle.decision
            assert all(price == 0.001 and sigma == 0.0 for _, price, sigma in sip.ledger.entries)
            if sip.decision is Decision.CANCEL:
                assert sip.spent == pytest.approx(len(sip.candidates) * 0.001, abs=1e-12)

    def test_early_open_can_stop_exploration(self):
        users = grid_of_users(10, 30, valuation=0.0009)
        model = ProfitModel.from_threshold(100.0, 2.0)
        cfg = StrategyConfig(candidate_margin=50_000.0)
        run = run_sip(users, REGION, model, PRICING, cfg, np.random.default_rng(1))
        assert run.decision is Decision.OPEN
        # opening fires at the third exact inside point, before the ladder
        assert run.purchases == 3

    def test_too_few_candidates_always_cancels(self):
        users = grid_of_users(3, 0)
        model = ProfitModel.from_threshold(100.0, 3.0)  # beta * 3 == cost
        cfg = StrategyConfig(candidate_margin=2_000.0)
        run = run_sip(users, REGION, model, PRICING, cfg, np.random.default_rng(2))
        assert run.decision is Decision.CANCEL


class TestSIPT:
    def test_keeps_buying_past_negative_eip(self):
        """A single far-away candidate: SIP stops at the first negative EIP,
        SIP-T keeps refining the point until its noise clears the terminal
        threshold."""
        users = [User(0, GeoPoint(20_000.0, 20_000.0), 2.0)]
        model = ProfitModel.from_threshold(100.0, 4.0)
        cfg = StrategyConfig(candidate_margin=math.inf)
        sip = run_sip(users, REGION, model, PRICING, cfg, np.random.default_rng(3))
        sipt = run_sip_t(users, REGION, model, PRICING, cfg, np.random.default_rng(3))
        assert sip.decision is Decision.CANCEL and sipt.decision is Decision.CANCEL
        assert sipt.purchases > sip.purchases
        # SIP-T refined to much lower noise than the point SIP settled for
        assert sipt.ledger.entries[-1][2] < sip.ledger.entries[-1][2]

    def test_never_pays_above_valuation(self):
        users = grid_of_users(12, 12, valuation=1.5)
        model = ProfitModel.from_threshold(100.0, 20.0)
        cfg = StrategyConfig(candidate_margin=9_000.0)
        for runner in (run_sip, run_sip_t):
            run = runner(users, REGION, model, PRICING, cfg, np.random.default_rng(4))
            assert all(price <= 1.5 + 1e-15 for _, price, _ in run.ledger.entries)

    def test_prices_strictly_increase_per_user(self):
        users = grid_of_users(15, 15, valuation=2.5)
        model = ProfitModel.from_threshold(100.0, 10.0)
        cfg = StrategyConfig(candidate_margin=9_000.0)
        for runner in (run_sip, run_sip_t):
            run = runner(users, REGION, model, PRICING, cfg, np.random.default_rng(5))
            seen: dict[int, float] = {}
            for uid, price, _ in run.ledger.entries:
                assert price > seen.get(uid, 0.0)
                seen[uid] = price

    def test_termination_bound(self):
        users = grid_of_users(20, 20, valuation=3.0)
        model = ProfitModel.from_threshold(100.0, 50.0)
        cfg = StrategyConfig(candidate_margin=9_000.0)
        for runner in (run_sip, run_sip_t):
            run = runner(users, REGION, model, PRICING, cfg, np.random.default_rng(6))
            counts = collections.Counter(uid for uid, _, _ in run.ledger.entries)
            for uid, n in counts.items():
                assert n <= ladder_bound(3.0, cfg.start_price, cfg.increment)


class TestPoI:
    def test_all_grades_nonpositive_buys_nothing(self):
        # valuations above beta * p_uniform make every grade <= 0
        users = grid_of_users(5, 0, valuation=50.0)
        model = ProfitModel.from_threshold(100.0, 3.0)
        cfg = StrategyConfig(candidate_margin=2_500.0)  # p_u = 1/4
        run = run_poi(users, REGION, model, PRICING, cfg, np.random.default_rng(7))
        assert run.decision is Decision.CANCEL
        assert run.spent == 0.0 and run.purchases == 0

    def test_single_candidate_grade(self):
        # margin chosen so the candidate box has twice the region area
        margin = (math.sqrt(2.0) - 1.0) / 2.0 * REGION.side
        users = [User(0, GeoPoint(2_500.0, 2_500.0), 1.0)]
        model = ProfitModel.from_threshold(100.0, 3.0)
        cfg = StrategyConfig(candidate_margin=margin)
        run = run_poi(users, REGION, model, PRICING, cfg, np.random.default_rng(8))
        # grade = 100 * 0.5 - 1 = 49 > 0, so the point is bought at full price
        assert run.purchases == 1
        assert run.ledger.entries[0][1] == 1.0
        assert run.ledger.entries[0][2] == 0.0

    def test_purchase_order_follows_grades(self):
        valuations = [3.0, 1.0, 2.0, 5.0, 0.5]
        users = make_users(
            [(100.0, 100.0), (200.0, 200.0), (300.0, 300.0), (400.0, 400.0), (500.0, 500.0)],
            valuations,
        )
        model = ProfitModel.from_threshold(100.0, 100.0)  # never opens mid-run
        cfg = StrategyConfig(candidate_margin=Region(0, 0, 5_000.0).side * ((math.sqrt(25) - 1) / 2))
        # p_u = 1/25 -> grade = 4 - valuation; grades: 1, 3, 2, -1, 3.5
        run = run_poi(users, REGION, model, PRICING, cfg, np.random.default_rng(9))
        bought = [uid for uid, _, _ in run.ledger.entries]
        assert bought == [4, 1, 2, 0]  # descending grade, id 3 graded out

    def test_stops_at_opening_condition(self):
        users = grid_of_users(6, 0, valuation=0.5)
        model = ProfitModel.from_threshold(100.0, 2.0)
        cfg = StrategyConfig(candidate_margin=1_000.0)
        run = run_poi(users, REGION, model, PRICING, cfg, np.random.default_rng(10))
        assert run.decision is Decision.OPEN
        assert run.purchases == 3  # exact points: opens one past break-even


class TestFMC:
    def test_budget_split(self):
        users = grid_of_users(4, 0)
        model = ProfitModel.from_threshold(100.0, 400.0)
        cfg = StrategyConfig(candidate_margin=1_000.0)
        run = run_fmc(users, REGION, model, PRICING, cfg, np.random.default_rng(11), 0.001)
        assert run.purchases == 4
        assert all(price == pytest.approx(10.0, abs=1e-12) for _, price, _ in run.ledger.entries)
        assert run.spent == pytest.approx(40.0, abs=1e-9)

    def test_exact_data_matches_oracle(self):
        # fraction 2.0 of the fixed cost pays every candidate above their
        # valuation, so the belief holds exact points
        users = grid_of_users(7, 5, valuation=0.5)
        model = ProfitModel.from_threshold(100.0, 5.0)
        cfg = StrategyConfig(candidate_margin=9_000.0)
        run = run_fmc(users, REGION, model, PRICING, cfg, np.random.default_rng(12), 2.0)
        oracle = run_oracle(users, REGION, model)
        assert run.decision == oracle.decision
        assert run.spent == pytest.approx(2.0 * model.fixed_cost, abs=1e-9)

    def test_zero_candidates(self):
        model = ProfitModel.from_threshold(100.0, 5.0)
        cfg = StrategyConfig(candidate_margin=1_000.0)
        run = run_fmc([], REGION, model, PRICING, cfg, np.random.default_rng(13), 0.01)
        assert run.decision is Decision.CANCEL and run.spent == 0.0

    def test_may_pay_above_valuation(self):
        users = grid_of_users(2, 0, valuation=0.5)
        model = ProfitModel.from_threshold(100.0, 4.0)
        cfg = StrategyConfig(candidate_margin=1_000.0)
        run = run_fmc(users, REGION, model, PRICING, cfg, np.random.default_rng(14), 0.01)
        assert all(price == pytest.approx(2.0) and sigma == 0.0 for _, price, sigma in run.ledger.entries)

    def test_id_round_trip(self):
        for fraction in (0.001, 0.01, 0.02):
            assert fmc_fraction_from_id(fmc_strategy_id(fraction)) == pytest.approx(fraction)
        assert fmc_strategy_id(0.001) == "fmc_0.1"


class TestDominanceAndDeterminism:
    def _runs(self, seed):
        users = grid_of_users(30, 40, valuation=2.0)
        model = ProfitModel.from_threshold(100.0, 8.0)
        cfg = StrategyConfig(candidate_margin=9_000.0)
        out = {}
        for name, runner in [("sip", run_sip), ("sip_t", run_sip_t), ("poi", run_poi)]:
            out[name] = runner(users, REGION, model, PRICING, cfg, np.random.default_rng(seed))
        out["fmc"] = run_fmc(users, REGION, model, PRICING, cfg, np.random.default_rng(seed), 0.01)
        out["oracle"] = run_oracle(users, REGION, model)
        return users, model, out

    def test_oracle_dominates(self):
        users, model, runs = self._runs(15)
        n_true = sum(1 for u in users if REGION.contains(u.true_location))

        def profit(run):
            payoff = model.beta * n_true - model.fixed_cost if run.decision is Decision.OPEN else 0.0
            return payoff - run.spent

        for name, run in runs.items():
            assert profit(runs["oracle"]) >= profit(run) - 1e-12, name

    def test_identical_seed_reproduces_everything(self):
        _, _, first = self._runs(16)
        _, _, second = self._runs(16)
        for name in first:
            assert first[name].decision == second[name].decision
            assert first[name].spent == second[name].spent
            assert first[name].ledger.entries == second[name].ledger.entries
