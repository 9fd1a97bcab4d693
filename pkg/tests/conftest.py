import numpy as np
import pytest

from ccwsim.grid import CategoricalGrid
from ccwsim.synthetic import channel_ti


def random_grid(rng, h, w, nf=2):
    return CategoricalGrid(rng.integers(0, nf, size=(h, w)), nf)


@pytest.fixture
def rng():
    return np.random.default_rng(20240330)


@pytest.fixture(scope="session")
def small_channel_ti():
    return channel_ti(64, width=5.0, seed=3)


@pytest.fixture(scope="session")
def channel_256():
    return channel_ti(256, seed=1)
