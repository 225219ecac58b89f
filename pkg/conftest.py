import numpy as np
import pytest

from levy_ou.core.simulation import LevyOUModel, simulate_path
from levy_ou.core.special_functions import make_rng
from levy_ou.types import Family, SeriesTruncation, TimeSeries

MU = 2.0
SIGMA2 = 0.25


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240101)


@pytest.fixture
def gamma_model() -> LevyOUModel:
    return LevyOUModel.from_moments(Family.GAMMA, MU, SIGMA2)


@pytest.fixture
def ig_model() -> LevyOUModel:
    return LevyOUModel.from_moments(Family.INVERSE_GAUSSIAN, MU, SIGMA2)


@pytest.fixture
def trunc() -> SeriesTruncation:
    return SeriesTruncation()


@pytest.fixture
def fast_trunc() -> SeriesTruncation:
    # loose enough for inverse-Gaussian paths to stay cheap
    return SeriesTruncation(max_terms=1000, tail_tol=1e-6)


@pytest.fixture
def gamma_path(gamma_model, trunc) -> TimeSeries:
    """A gamma-OU path with theta0 = (2, 0.25, 0.5) and delta = 0.1."""
    return simulate_path(gamma_model, 0.5, 2000, 0.1, make_rng(11), trunc)


@pytest.fixture
def alternating() -> TimeSeries:
    return TimeSeries(values=[0.0, 1.0, 0.0, 1.0], delta=1.0)
