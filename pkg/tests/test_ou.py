import math

import numpy as np
import pytest

from shesim.model import Grid, Parameters, eigenvalue
from shesim.ou import ar1_coefficients, ar1_filter, ou_path, ou_paths


def test_ar1_coefficients_hand_value():
    # lambda = 1 via theta2 = 1/pi^2, dt = ln 2, sigma = 1
    p = Parameters(1.0, 1 / math.pi**2, 0.0, 0.0)
    assert eigenvalue(p, 1) == pytest.approx(1.0, rel=1e-15)
    decay, scale = ar1_coefficients(p, 1, math.log(2.0))
    assert decay == pytest.approx(0.5, rel=1e-15)
    assert scale == pytest.approx(math.sqrt(0.375), rel=1e-14)


def test_large_step_no_overflow(params):
    decay, scale = ar1_coefficients(params, 1000, 10.0)
    assert decay == 0.0
    assert scale == pytest.approx(math.sqrt(params.sigma2 / (2 * eigenvalue(params, 1000))), rel=1e-15)
    assert np.all(np.isfinite(ar1_coefficients(params, np.arange(1, 50), 1e6)))


def test_stationary_variance(params):
    rng = np.random.default_rng(1)
    x = ou_paths(params, [1], Grid(0, 2), "stationary", rng, size=100_000)[:, 0, 0]
    target = 0.1 / (2 * 4.714802)
    assert target == pytest.approx(0.0106050, abs=5e-7)
    v = x.var(ddof=1)
    se = target * math.sqrt(2 / (x.size - 1))
    assert abs(v - target) < 3 * se


@pytest.mark.parametrize("ell", [1, 5])
def test_zero_start_marginal_variance(params, ell):
    grid = Grid(20, 2, 1.0)
    rng = np.random.default_rng(ell)
    x = ou_paths(params, [ell], grid, "zero", rng, size=40_000)[:, 0, :]
    assert np.all(x[:, 0] == 0.0)
    lam = eigenvalue(params, ell)
    for i in (1, grid.N):
        target = params.sigma2 / (2 * lam) * -math.expm1(-2 * lam * grid.time(i))
        se = target * math.sqrt(2 / (x.shape[0] - 1))
        assert abs(x[:, i].var(ddof=1) - target) < 4 * se


def test_lag_one_covariance(params):
    grid = Grid(3, 2, 0.3)
    rng = np.random.default_rng(7)
    x = ou_paths(params, [1], grid, "stationary", rng, size=100_000)[:, 0, :]
    lam = eigenvalue(params, 1)
    target = params.sigma2 / (2 * lam) * math.exp(-lam * grid.dt)
    prod = x[:, 1] * x[:, 2]
    se = prod.std(ddof=1) / math.sqrt(prod.size)
    assert abs(prod.mean() - target) < 4 * se


def test_filter_paths_agree():
    # the lfilter branch (long paths) and the time loop give the same result
    rng = np.random.default_rng(3)
    decay = np.array([0.9, 0.2])
    scale = np.array([1.0, 0.5])
    start = rng.standard_normal(2)
    innov = rng.standard_normal((2, 50))
    long_ = ar1_filter(decay, scale, start, innov)
    loop = np.empty_like(long_)
    loop[:, 0] = start
    for i in range(50):
        loop[:, i + 1] = decay * loop[:, i] + scale * innov[:, i]
    np.testing.assert_allclose(long_, loop, rtol=1e-13, atol=1e-15)


def test_determinism(params):
    grid = Grid(10, 4)
    a = ou_path(params, 3, grid, "stationary", np.random.default_rng(5))
    b = ou_path(params, 3, grid, "stationary", np.random.default_rng(5))
    assert np.array_equal(a.values, b.values)
    assert len(a) == 11
    with pytest.raises(ValueError):
        ou_path(params, 0, grid, "zero", np.random.default_rng(5))
