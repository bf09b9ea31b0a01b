import numpy as np
import pytest

from narx_mss.data import Dataset
from narx_mss.systems import generate


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run Monte-Carlo recovery tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte-Carlo recovery runs, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def s1_data():
    return generate("S1", seed=7)


@pytest.fixture(scope="session")
def s2_data():
    return generate("S2", seed=7)


@pytest.fixture
def tiny_dataset(rng):
    x = rng.uniform(-1, 1, 60)
    return Dataset(x[:, None], rng.normal(size=60))
