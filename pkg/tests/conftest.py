import numpy as np
import pytest

from furst.products import AtomicMeasureG
from furst.semigroup import s_lambda
from furst.stationary import sample_stationary

from oracles import cantor_sample


@pytest.fixture(scope="session")
def uniform_points():
    return np.random.default_rng(11).random(1_000_000)


@pytest.fixture(scope="session")
def cantor_points():
    return cantor_sample(1_000_000, 12)


@pytest.fixture(scope="session")
def s4():
    return AtomicMeasureG.uniform(s_lambda(4))


@pytest.fixture(scope="session")
def s4_points(s4):
    return sample_stationary(s4, 128, 1_000_000, seed=0)
