"""geomarket: a simulation library for pricing private location data.

Simulated users sell Gaussian-noised copies of their location, with noise
that shrinks as the offered price approaches their privacy valuation.  Buyer
strategies purchase data adaptively to decide, per grid region, whether
enough people are inside to make opening a venue profitable, and are scored
by the profit they actually realize.

Subpackages / modules
---------------------
geo
    Coordinate conversion, square regions, grids, Gaussian rectangle mass.
marketplace
    Users, valuations, the price-to-noise rule, noisy sales, ledgers.
belief
    In-region probabilities, expected counts, expected incremental profit.
strategies
    SIP, SIP-T and the Oracle / PoI / FMC baselines.
evaluation
    Grid harness with ARP / MRP / recall metrics.
ingest
    Raw check-in parsing, filtering, sampling, snapshots.
synthetic
    Deterministic clustered stand-in data in the raw check-in format.
cli
    `geomarket ingest|run|report` command line.
"""

from .belief import (
    BeliefState,
    ProfitModel,
    eip,
    expected_open_profit,
    expected_posterior_prob,
    ingest_observation,
    opening_condition,
)
from .evaluation import (
    MetricsReport,
    RegionOutcome,
    default_grid_box,
    evaluate,
    ground_truth_count,
    market_users,
    realized_profit,
)
from .geo import (
    BoundingBox,
    GeoPoint,
    LatLong,
    Region,
    distance_to_edges,
    gaussian_prob_in_region,
    latlong_to_local,
    make_grid,
)
from .ingest import Dataset, LatLongBox, filter_and_sample, load_snapshot, parse_checkins, save_snapshot
from .marketplace import (
    Observation,
    PricingParams,
    PurchaseLedger,
    User,
    ValuationDistribution,
    noise_sigma,
    sample_valuation,
    sell,
)
from .strategies import (
    Decision,
    RegionRun,
    StrategyConfig,
    best_next_action,
    candidate_set,
    run_fmc,
    run_oracle,
    run_poi,
    run_sip,
    run_sip_t,
)

__version__ = "0.1.0"
