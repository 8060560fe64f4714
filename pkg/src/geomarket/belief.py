"""Buyer-side inference over one target region.

Given the noisy observations bought so far, each user's chance of being
inside the region is the rectangle mass of an isotropic Gaussian centered on
the best (lowest-noise) observation held for that user.  The number of users
inside the region is then a sum of independent Bernoulli trials whose mean,
the expected in-region count, is all the open/cancel rule needs: opening is
worthwhile exactly when margin-per-user times that mean exceeds the fixed
cost.

The expected incremental profit (EIP) of re-buying one user's point at a
higher price asks: averaged over the observation we would receive, how much
does the expected open-profit move, net of that price?  Writing the new
observation's predictive law as N(z, (sigma^2 + sigma_next^2) I) and the new
in-region probability as the rectangle mass under N(z', sigma_next^2 I), the
two nested Gaussian integrals collapse: the expectation equals the rectangle
mass of N(z, (sigma^2 + 2 sigma_next^2) I).  We implement that closed form;
Monte-Carlo and quadrature versions of the nested integrals survive in the
test suite as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geo import GeoPoint, Region, gaussian_prob_in_region
from .marketplace import Observation, PricingParams, noise_sigma

__all__ = [
    "ProfitModel",
    "BeliefState",
    "ingest_observation",
    "expected_open_profit",
    "opening_condition",
    "expected_posterior_prob",
    "eip",
]


@dataclass(frozen=True, slots=True)
class ProfitModel:
    """Open-decision economics: margin per user (beta) and fixed cost."""

    beta: float
    fixed_cost: float

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.fixed_cost < 0:
            raise ValueError("fixed_cost must be nonnegative")

    @property
    def min_users(self) -> float:
        """Break-even user count: opening pays off strictly above this."""
        return self.fixed_cost / self.beta

    @classmethod
    def from_threshold(cls, beta: float, min_users: float) -> "ProfitModel":
        """Build the model from the break-even count, deriving the fixed cost."""
        return cls(beta=beta, fixed_cost=beta * min_users)


class BeliefState:
    """Per-user best observations and the cached expected in-region count.

    Holds, for each user seen, the most accurate (minimum-sigma) observation
    and its in-region probability.  The expected count is maintained
    incrementally on every ingest; `recompute_expected_count` re-derives it
    from scratch and is used as a drift audit.
    """

    __slots__ = ("region", "best_obs", "probs", "expected_count")

    def __init__(self, region: Region) -> None:
        self.region = region
        self.best_obs: dict[int, Observation] = {}
        self.probs: dict[int, float] = {}
        self.expected_count: float = 0.0

    def prob(self, user_id: int) -> float:
        """In-region probability for a user; 0 for users never purchased."""
        return self.probs.get(user_id, 0.0)

    def ingest(self, obs: Observation) -> None:
        """Keep `obs` if it is the most accurate seen for its user.

        Replacement recomputes that user's probability and shifts the
        expected count by the difference; less accurate observations leave
        the belief untouched.
        """
        held = self.best_obs.get(obs.user_id)
        if held is not None and obs.sigma >= held.sigma:
            return
        p_new = gaussian_prob_in_region(obs.z, obs.sigma, self.region)
        p_old = self.probs.get(obs.user_id, 0.0)
        self.best_obs[obs.user_id] = obs
        self.probs[obs.user_id] = p_new
        self.expected_count += p_new - p_old

    def recompute_expected_count(self) -> float:
        """Audit hook: full re-derivation of the expected count."""
        self.expected_count = math.fsum(self.probs.values())
        return self.expected_count


def ingest_observation(belief: BeliefState, obs: Observation) -> BeliefState:
    """Fold one observation into the belief (in place) and return it."""
    belief.ingest(obs)
    return belief


def expected_open_profit(belief: BeliefState, model: ProfitModel) -> float:
    """Expected payoff of opening now: beta * expected count - fixed cost."""
    return model.beta * belief.expected_count - model.fixed_cost


def opening_condition(belief: BeliefState, model: ProfitModel) -> bool:
    """True iff the expected open payoff is strictly positive."""
    return model.beta * belief.expected_count - model.fixed_cost > 0.0


def expected_posterior_prob(
    z: GeoPoint, sigma: float, sigma_next: float, region: Region
) -> float:
    """Expected in-region probability after re-buying at noise `sigma_next`.

    The new observation z' is distributed N(z, (sigma^2 + sigma_next^2) I)
    and would be scored with the rectangle mass of N(z', sigma_next^2 I);
    averaging the second Gaussian integral over the first collapses to a
    single rectangle mass with variance sigma^2 + 2 sigma_next^2 per axis.
    With sigma_next = 0 this reduces to the current probability.
    """
    if sigma < 0 or sigma_next < 0:
        raise ValueError("noise levels must be nonnegative")
    s = math.sqrt(sigma * sigma + 2.0 * sigma_next * sigma_next)
    return gaussian_prob_in_region(z, s, region)


def eip(
    obs: Observation,
    next_price: float,
    valuation: float,
    region: Region,
    beta: float,
    pricing: PricingParams,
) -> float:
    """Expected incremental profit of re-buying `obs`'s point at `next_price`.

    beta * (expected posterior probability - current probability) minus the
    price.  Positive values mean the purchase is expected to raise the open
    payoff by more than it costs.
    """
    if next_price <= 0:
        raise ValueError(f"next_price must be positive, got {next_price}")
    sigma_next = noise_sigma(valuation, next_price, pricing)
    p_current = gaussian_prob_in_region(obs.z, obs.sigma, region)
    p_expected = expected_posterior_prob(obs.z, obs.sigma, sigma_next, region)
    return beta * (p_expected - p_current) - next_price
