import numpy as np
import pytest

from gpattr import ArdSeHyper, fit
from gpattr.data_io import simulate


@pytest.fixture(scope="session")
def sim_data():
    return simulate(80, 0.3, seed=1)


@pytest.fixture(scope="session")
def sim_model(sim_data):
    """Fitted model with fixed, sensible hyperparameters (no optimizer noise)."""
    hyper = ArdSeHyper(0.6, np.array([1.2, 0.8]), 0.1)
    return fit(sim_data, hyper)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
