import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from geomarket.belief import ProfitModel
from geomarket.evaluation import default_grid_box
from geomarket.geo import make_grid
from geomarket.marketplace import PricingParams
from geomarket.strategies import StrategyConfig
from geomarket.synthetic import synthetic_dataset


@pytest.fixture(scope="session")
def dataset():
    """Synthetic LA-box dataset built through the full ingestion pipeline."""
    return synthetic_dataset()


@pytest.fixture(scope="session")
def default_grid(dataset):
    return make_grid(default_grid_box(dataset), 5_000.0)


@pytest.fixture(scope="session")
def default_model():
    return ProfitModel.from_threshold(100.0, 400.0)


@pytest.fixture(scope="session")
def default_pricing():
    return PricingParams(20.0)


@pytest.fixture(scope="session")
def default_cfg():
    return StrategyConfig(
        start_price=0.001, increment=2.0, terminal_k=2.0, candidate_margin=10_000.0
    )
