"""Buyer strategies for one region: probing (SIP), probing with terminal
beliefs (SIP-T), and the Oracle / PoI / FMC baselines.

Every strategy consumes the same candidate set (users whose true location
falls in a margin-expanded box around the region), owns a private RNG and
purchase ledger, and ends a run with exactly one Open or Cancel decision.

SIP buys every candidate once at a small starting price (pure exploration),
then repeatedly re-buys the point with the highest expected incremental
profit at a geometrically increased price, stopping as soon as the best EIP
is no longer positive.  SIP-T drops the EIP stopping rule: it keeps refining
each point, however unpromising, until the observation is confidently inside
or outside the region (every axis margin at least terminal_k times the noise
level), and cancels only when no point remains refinable.  Both open the
moment the expected payoff of opening turns positive.

All tie-breaking (EIP argmax, grade sort, iteration order) is by ascending
user id, which together with per-run RNG streams makes runs reproducible.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .belief import BeliefState, ProfitModel, expected_posterior_prob, opening_condition
from .geo import Region, gaussian_prob_in_region
from .marketplace import Observation, PricingParams, PurchaseLedger, User, noise_sigma, sell

__all__ = [
    "Decision",
    "StrategyConfig",
    "RegionRun",
    "candidate_set",
    "candidate_users",
    "best_next_action",
    "is_terminal",
    "run_sip",
    "run_sip_t",
    "run_oracle",
    "run_poi",
    "run_fmc",
    "fmc_strategy_id",
    "fmc_fraction_from_id",
    "build_suite",
]


class Decision(enum.Enum):
    OPEN = "open"
    CANCEL = "cancel"


@dataclass(frozen=True, slots=True)
class StrategyConfig:
    """Knobs shared by the purchasing strategies.

    candidate_margin is the padding (meters) added around the region on every
    side to form the candidate box; math.inf means the whole dataset.
    fmc_fraction is only read by the fixed-maximum-cost baseline.
    """

    start_price: float = 0.001
    increment: float = 2.0
    terminal_k: float = 2.0
    candidate_margin: float = 10_000.0
    fmc_fraction: float = 0.01

    def __post_init__(self) -> None:
        if not self.start_price > 0:
            raise ValueError("start_price must be positive")
        if not self.increment > 1:
            raise ValueError("increment must exceed 1")
        if not self.terminal_k > 0:
            raise ValueError("terminal_k must be positive")
        if self.candidate_margin < 0:
            raise ValueError("candidate_margin must be nonnegative")


@dataclass(slots=True)
class RegionRun:
    """Everything one strategy did on one region."""

    region: Region
    candidates: list[int]
    belief: BeliefState
    ledger: PurchaseLedger
    decision: Decision | None = None

    @property
    def spent(self) -> float:
        return self.ledger.total_spent

    @property
    def purchases(self) -> int:
        return len(self.ledger)


def candidate_users(
    users: Sequence[User], region: Region, margin: float
) -> list[User]:
    """Users whose true location lies in the margin-expanded region box,
    ascending by id.  margin = inf selects everyone."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    ordered = sorted(users, key=lambda u: u.id)
    if math.isinf(margin):
        return ordered
    x_lo = region.x_min - margin
    x_hi = region.x_max + margin
    y_lo = region.y_min - margin
    y_hi = region.y_max + margin
    return [
        u
        for u in ordered
        if x_lo <= u.true_location.x <= x_hi and y_lo <= u.true_location.y <= y_hi
    ]


def candidate_set(users: Sequence[User], region: Region, margin: float) -> list[int]:
    """Ids of the purchase candidates for `region` (see candidate_users)."""
    return [u.id for u in candidate_users(users, region, margin)]


def best_next_action(
    obs: Observation,
    valuation: float,
    region: Region,
    beta: float,
    pricing: PricingParams,
    increment: float,
) -> tuple[float, float] | None:
    """Best next re-purchase for one held observation, or None if exhausted.

    Walks the price ladder q_k = min(price_paid * increment^k, valuation),
    which includes the valuation exactly once, evaluates the EIP at each rung
    and returns (price, eip) for the maximum (first rung wins ties).  A point
    already bought at or above its valuation has nothing left to reveal.
    """
    q = obs.price_paid
    if q >= valuation:
        return None
    p_current = gaussian_prob_in_region(obs.z, obs.sigma, region)
    z = obs.z
    sigma = obs.sigma
    best_q = 0.0
    best_v = -math.inf
    while q < valuation:
        q = min(q * increment, valuation)
        sigma_next = noise_sigma(valuation, q, pricing)
        value = beta * (expected_posterior_prob(z, sigma, sigma_next, region) - p_current) - q
        if value > best_v:
            best_v = value
            best_q = q
    return best_q, best_v


def is_terminal(obs: Observation, region: Region, k: float) -> bool:
    """Whether an observation is confidently inside or outside per axis.

    An exact observation (sigma = 0) is always terminal.  Otherwise each axis
    coordinate must either sit inside the region interval with at least
    k * sigma to spare on both edges, or outside it with at least k * sigma
    to the nearest edge.
    """
    sigma = obs.sigma
    if sigma == 0.0:
        return True
    need = k * sigma
    z = obs.z
    for v, lo, hi in (
        (z.x, region.x_min, region.x_min + region.side),
        (z.y, region.y_min, region.y_min + region.side),
    ):
        if lo <= v < hi:
            if v - lo < need or hi - v < need:
                return False
        else:
            dist = lo - v if v < lo else v - hi
            if dist < need:
                return False
    return True


def _finish(run: RegionRun, decision: Decision) -> RegionRun:
    run.decision = decision
    return run


def _resolve_candidates(
    users: Sequence[User],
    region: Region,
    cfg: StrategyConfig,
    candidates: Sequence[User] | None,
) -> list[User]:
    if candidates is None:
        return candidate_users(users, region, cfg.candidate_margin)
    return list(candidates)


def _probe(
    users: Sequence[User],
    region: Region,
    model: ProfitModel,
    pricing: PricingParams,
    cfg: StrategyConfig,
    rng: np.random.Generator,
    *,
    use_terminals: bool,
    candidates: Sequence[User] | None = None,
) -> RegionRun:
    """Shared SIP / SIP-T core; the two differ only in their stopping rule."""
    cands = _resolve_candidates(users, region, cfg, candidates)
    belief = BeliefState(region)
    ledger = PurchaseLedger()
    run = RegionRun(region, [u.id for u in cands], belief, ledger)
    beta = model.beta
    cost = model.fixed_cost
    q0 = cfg.start_price
    h = cfg.increment
    k = cfg.terminal_k

    # Pure exploration: one cheap purchase per candidate, opening as soon as
    # the expected payoff turns positive.
    for user in cands:
        belief.ingest(sell(user, q0, pricing, rng, ledger))
        if beta * belief.expected_count - cost > 0.0:
            return _finish(run, Decision.OPEN)

    # Exploration-exploitation: a max-priority queue of each point's best
    # next re-purchase, keyed by EIP with ascending-id tie-break.  Each user
    # has at most one live entry; it is removed on pop and reinserted only
    # after that user's point is re-bought and re-scored.
    by_id = {u.id: u for u in cands}
    heap: list[tuple[float, int, float]] = []
    for user in cands:
        action = best_next_action(
            belief.best_obs[user.id], user.valuation, region, beta, pricing, h
        )
        if action is not None:
            heap.append((-action[1], user.id, action[0]))
    heapq.heapify(heap)

    while heap:
        neg_eip, uid, price = heapq.heappop(heap)
        if not use_terminals and -neg_eip <= 0.0:
            return _finish(run, Decision.CANCEL)
        user = by_id[uid]
        obs = sell(user, price, pricing, rng, ledger)
        belief.ingest(obs)
        if beta * belief.expected_count - cost > 0.0:
            return _finish(run, Decision.OPEN)
        if use_terminals and is_terminal(obs, region, k):
            continue
        action = best_next_action(obs, user.valuation, region, beta, pricing, h)
        if action is not None:
            heapq.heappush(heap, (-action[1], uid, action[0]))
    return _finish(run, Decision.CANCEL)


def run_sip(
    users: Sequence[User],
    region: Region,
    model: ProfitModel,
    pricing: PricingParams,
    cfg: StrategyConfig,
    rng: np.random.Generator,
    *,
    candidates: Sequence[User] | None = None,
) -> RegionRun:
    """Spatial information probing: explore cheaply, then greedily re-buy the
    highest-EIP point until the best EIP is no longer positive."""
    return _probe(
        users, region, model, pricing, cfg, rng, use_terminals=False, candidates=candidates
    )


def run_sip_t(
    users: Sequence[User],
    region: Region,
    model: ProfitModel,
    pricing: PricingParams,
    cfg: StrategyConfig,
    rng: np.random.Generator,
    *,
    candidates: Sequence[User] | None = None,
) -> RegionRun:
    """SIP with terminal beliefs: negative-EIP points stay in play, each point
    is refined until confidently inside or outside, and the run cancels only
    when nothing refinable remains."""
    return _probe(
        users, region, model, pricing, cfg, rng, use_terminals=True, candidates=candidates
    )


def run_oracle(
    users: Sequence[User],
    region: Region,
    model: ProfitModel,
    *,
    candidates: Sequence[User] | None = None,
) -> RegionRun:
    """Free-information benchmark: decides from the true in-region count."""
    cands = candidates if candidates is not None else users
    n_true = sum(1 for u in cands if region.contains(u.true_location))
    run = RegionRun(region, [u.id for u in cands], BeliefState(region), PurchaseLedger())
    open_it = model.beta * n_true - model.fixed_cost > 0.0
    return _finish(run, Decision.OPEN if open_it else Decision.CANCEL)


def run_poi(
    users: Sequence[User],
    region: Region,
    model: ProfitModel,
    pricing: PricingParams,
    cfg: StrategyConfig,
    rng: np.random.Generator,
    *,
    candidates: Sequence[User] | None = None,
) -> RegionRun:
    """Price-of-information baseline: grade each candidate by the expected
    profit of a full-price purchase under a uniform in-region prior, then buy
    down the grade ranking (exact data, full ask price) until grades run
    non-positive or the opening condition holds."""
    cands = _resolve_candidates(users, region, cfg, candidates)
    belief = BeliefState(region)
    ledger = PurchaseLedger()
    run = RegionRun(region, [u.id for u in cands], belief, ledger)
    if not cands:
        return _finish(run, Decision.CANCEL)

    if math.isinf(cfg.candidate_margin):
        xs = [u.true_location.x for u in cands]
        ys = [u.true_location.y for u in cands]
        box_area = max(max(xs) - min(xs), 1e-9) * max(max(ys) - min(ys), 1e-9)
    else:
        box = region.expand(cfg.candidate_margin)
        box_area = box.area
    p_uniform = region.area / box_area

    graded = sorted(
        ((model.beta * p_uniform - u.valuation, u) for u in cands),
        key=lambda t: (-t[0], t[1].id),
    )
    for grade, user in graded:
        if grade <= 0.0:
            break
        if opening_condition(belief, model):
            break
        belief.ingest(sell(user, user.valuation, pricing, rng, ledger))
    decision = Decision.OPEN if opening_condition(belief, model) else Decision.CANCEL
    return _finish(run, decision)


def run_fmc(
    users: Sequence[User],
    region: Region,
    model: ProfitModel,
    pricing: PricingParams,
    cfg: StrategyConfig,
    rng: np.random.Generator,
    fraction: float | None = None,
    *,
    candidates: Sequence[User] | None = None,
) -> RegionRun:
    """Fixed-maximum-cost baseline: spend fraction * fixed_cost, split
    uniformly over all candidates in a single pass, then decide once."""
    frac = cfg.fmc_fraction if fraction is None else fraction
    if not frac > 0:
        raise ValueError("fraction must be positive")
    cands = _resolve_candidates(users, region, cfg, candidates)
    belief = BeliefState(region)
    ledger = PurchaseLedger()
    run = RegionRun(region, [u.id for u in cands], belief, ledger)
    if not cands:
        return _finish(run, Decision.CANCEL)
    price = frac * model.fixed_cost / len(cands)
    for user in cands:
        belief.ingest(sell(user, price, pricing, rng, ledger))
    decision = Decision.OPEN if opening_condition(belief, model) else Decision.CANCEL
    return _finish(run, decision)


def fmc_strategy_id(fraction: float) -> str:
    """Canonical id for an FMC variant, named by its percent of fixed cost."""
    return f"fmc_{fraction * 100:g}"


def fmc_fraction_from_id(strategy_id: str) -> float:
    """Inverse of fmc_strategy_id."""
    return float(strategy_id.split("_", 1)[1]) / 100.0


def build_suite(strategy_ids: Sequence[str]):
    """Map strategy ids to runners with the uniform signature
    (users, region, model, pricing, cfg, rng, candidates=None) -> RegionRun.
    """
    suite = {}
    for sid in strategy_ids:
        if sid == "oracle":
            suite[sid] = (
                lambda users, region, model, pricing, cfg, rng, candidates=None: run_oracle(
                    users, region, model, candidates=candidates
                )
            )
        elif sid == "sip":
            suite[sid] = run_sip
        elif sid == "sip_t":
            suite[sid] = run_sip_t
        elif sid == "poi":
            suite[sid] = run_poi
        elif sid.startswith("fmc_"):
            fraction = fmc_fraction_from_id(sid)
            suite[sid] = _fmc_runner(fraction)
        else:
            raise ValueError(f"unknown strategy id: {sid!r}")
    return suite


def _fmc_runner(fraction: float):
    def runner(users, region, model, pricing, cfg, rng, candidates=None):
        return run_fmc(
            users, region, model, pricing, cfg, rng, fraction, candidates=candidates
        )

    return runner
