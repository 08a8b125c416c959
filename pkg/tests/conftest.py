import numpy as np
import pytest

from shesim.model import DEFAULT_PARAMETERS, Parameters


@pytest.fixture
def params():
    return DEFAULT_PARAMETERS


@pytest.fixture
def laplace():
    # Gamma = 0: pure Laplacian, unit noise
    return Parameters(sigma2=1.0, theta2=1.0, theta1=0.0, theta0=0.0)


@pytest.fixture
def hyperbolic():
    # Gamma = 2 > 0
    return Parameters(sigma2=0.1, theta2=0.5, theta1=0.0, theta0=-1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def cov_with_se(x, y):
    """Sample covariance of paired draws and its standard error."""
    x = x - x.mean()
    y = y - y.mean()
    prod = x * y
    return prod.mean(), prod.std(ddof=1) / np.sqrt(prod.size)
