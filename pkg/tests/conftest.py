import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from infofrontier import AnalyticToy, micro_bins

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def toy():
    return AnalyticToy()


@pytest.fixture(scope="session")
def toy_bins(toy):
    return micro_bins(toy, 2000)


@pytest.fixture(scope="session")
def toy_bins_small(toy):
    return micro_bins(toy, 200)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
