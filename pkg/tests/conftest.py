import numpy as np
import pytest

from src.mvmatern.models.dataset import Dataset
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.process import ProcessParams


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte-Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def unit_process():
    return ProcessParams(nu=0.5, a=1.0, sigma=1.0)


@pytest.fixture
def smm_pair():
    """Bivariate d=1 SMM with unequal smoothness and a complex cross term."""
    processes = [ProcessParams(nu=0.5, a=8.0, sigma=1.0), ProcessParams(nu=0.75, a=12.0, sigma=1.0)]
    return ModelSpec.build("SMM", processes, {(0, 1): 0.4 + 0.4j}, dim=1)


@pytest.fixture
def symmetric_pair():
    """Equal (nu, a) so every channel has a closed form."""
    pp = ProcessParams(nu=0.7, a=2.0, sigma=1.0)
    return ModelSpec.build("SMM", [pp, pp], {(0, 1): 0.3 + 0.5j}, dim=1)


@pytest.fixture
def small_dataset():
    rng = np.random.default_rng(7)
    x = np.sort(rng.uniform(size=12))
    coords = np.concatenate([x, x])
    var = np.repeat([0, 1], 12)
    value = np.concatenate([np.sin(6 * x), np.cos(6 * x)]) + 0.1 * rng.standard_normal(24)
    return Dataset(coords=coords, var=var, value=value, p=2)
