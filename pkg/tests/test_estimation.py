import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from pydantic import ValidationError

from levy_ou.core.estimation import (
    AcfEstimate,
    acf_objective,
    estimate_all,
    lambda_hat_1,
    lambda_hat_2,
    max_lambda,
    sample_acf,
    sample_mean,
    sigma2_estimate,
)
from levy_ou.core.simulation import simulate_path
from levy_ou.core.special_functions import make_rng
from levy_ou.errors import (
    DegenerateVarianceError,
    DomainError,
    EstimatorUndefinedError,
)
from levy_ou.types import TimeSeries


def exact_acf(lambda_: float, delta: float, d: int) -> AcfEstimate:
    rho = np.exp(-lambda_ * delta * np.arange(d + 1))
    return AcfEstimate(gamma_hat=0.125 * rho, rho_hat=rho, n=1000, d=d)


def test_hand_example(alternating):
    acf = sample_acf(alternating, 1)
    assert sample_mean(alternating) == 0.5
    assert acf.gamma_hat == pytest.approx([0.25, -0.1875])
    assert acf.rho == pytest.approx([1.0, -0.75])
    assert sigma2_estimate(acf) == 0.5


def test_constant_series():
    series = TimeSeries(values=[3.0] * 20, delta=1.0)
    acf = sample_acf(series, 5)
    assert sample_mean(series) == 3.0
    assert sigma2_estimate(acf) == 0.0
    assert acf.rho_hat is None
    with pytest.raises(DegenerateVarianceError):
        acf.rho
    with pytest.raises(DegenerateVarianceError):
        estimate_all(series, 5)


def test_empty_series_is_rejected():
    with pytest.raises(ValidationError):
        TimeSeries(values=[], delta=1.0)


@pytest.mark.parametrize("d", [-1, 4, 10])
def test_sample_acf_lag_range(alternating, d):
    with pytest.raises(DomainError):
        sample_acf(alternating, d)


@settings(max_examples=50, deadline=None)
@given(
    arrays(
        np.float64,
        st.integers(min_value=3, max_value=300),
        elements=st.floats(min_value=-1e3, max_value=1e3, allow_subnormal=False),
    )
)
def test_sample_acf_invariants(values):
    series = TimeSeries(values=values, delta=1.0)
    d = min(5, len(series) - 1)
    acf = sample_acf(series, d)
    assert acf.gamma_hat[0] >= 0
    if acf.rho_hat is not None:
        assert acf.rho_hat[0] == 1.0
        assert np.all(np.abs(acf.rho_hat) <= 1.0)


def test_sample_acf_matches_direct_sum(gamma_path):
    y = gamma_path.values
    centered = y - y.mean()
    acf = sample_acf(gamma_path, 10)
    for h in range(11):
        direct = np.dot(centered[h:], centered[: y.size - h]) / y.size
        assert acf.gamma_hat[h] == pytest.approx(direct, rel=1e-10, abs=1e-14)
        assert acf.rho[h] == pytest.approx(acf.gamma_hat[h] / acf.gamma_hat[0])


def test_lambda_hat_1_exact_inversion():
    estimate = lambda_hat_1(exact_acf(0.5, 0.1, 1), 0.1)
    assert estimate.require() == pytest.approx(0.5)
    assert not estimate.clamped


def test_lambda_hat_1_boundary():
    acf = AcfEstimate(gamma_hat=np.ones(3), rho_hat=np.ones(3), n=10, d=2)
    estimate = lambda_hat_1(acf, 0.1)
    assert estimate.value == 0.0
    assert estimate.clamped


def test_lambda_hat_1_undefined(alternating):
    estimate = lambda_hat_1(sample_acf(alternating, 1), 1.0)
    assert estimate.undefined
    assert estimate.value is None
    with pytest.raises(EstimatorUndefinedError):
        estimate.require()


def test_lambda_hat_1_needs_lag_one(alternating):
    with pytest.raises(DomainError):
        lambda_hat_1(sample_acf(alternating, 0), 1.0)


def test_lambda_hat_2_exact_acf():
    estimate = lambda_hat_2(exact_acf(0.5, 0.1, 10), 10, 0.1)
    assert estimate.require() == pytest.approx(0.5, abs=1e-6)
    assert not estimate.clamped


@pytest.mark.parametrize("init", [None, 0.01, 3.0, 50.0])
def test_lambda_hat_2_ignores_init(init):
    estimate = lambda_hat_2(exact_acf(2.0, 0.1, 10), 10, 0.1, init=init)
    assert estimate.require() == pytest.approx(2.0, abs=1e-6)


def test_lambda_hat_2_flat_acf_is_clamped():
    acf = AcfEstimate(gamma_hat=np.ones(11), rho_hat=np.ones(11), n=100, d=10)
    estimate = lambda_hat_2(acf, 10, 0.1)
    assert estimate.value == 0.0
    assert estimate.clamped


def test_lambda_hat_2_is_a_minimizer(gamma_path):
    acf = sample_acf(gamma_path, 10)
    estimate = lambda_hat_2(acf, 10, 0.1)
    rho = acf.rho[1:]
    best = acf_objective(estimate.require(), rho, 0.1)
    for lam in np.linspace(0.0, 5.0, 501):
        assert best <= acf_objective(lam, rho, 0.1) + 1e-12


def test_lambda_hat_2_lag_range(gamma_path):
    acf = sample_acf(gamma_path, 5)
    with pytest.raises(DomainError):
        lambda_hat_2(acf, 6, 0.1)
    with pytest.raises(DomainError):
        lambda_hat_2(acf, 0, 0.1)


def test_acf_objective_zero_at_truth():
    rho = np.exp(-0.05 * np.arange(1, 11))
    assert acf_objective(0.5, rho, 0.1) == pytest.approx(0.0, abs=1e-30)
    assert acf_objective(0.6, rho, 0.1) > 0


def test_max_lambda():
    assert math.exp(-max_lambda(0.1) * 0.1) == pytest.approx(np.finfo(float).eps)


def test_estimate_all_tiny_series():
    series = TimeSeries(values=[1.0, 2.0], delta=1.0)
    estimates = estimate_all(series, 1)
    assert estimates.mu_hat == 1.5
    assert estimates.sigma2_hat == 0.5
    assert estimates.acf.rho[1] == pytest.approx(-0.5)
    assert estimates.lambda1.undefined


def test_estimate_all_white_noise():
    series = TimeSeries(values=make_rng(2).standard_normal(5000), delta=1.0)
    estimates = estimate_all(series, 10)
    assert estimates.lambda2_hat > 2.0
    if not estimates.lambda1.undefined:
        assert estimates.lambda1_hat > 2.0


def test_estimate_all_flags(gamma_path):
    estimates = estimate_all(gamma_path, 10)
    assert estimates.n == 2000
    assert not estimates.nonstationary_flag
    assert estimates.model_dump()["nonstationary_flag"] is False


@pytest.mark.slow
def test_estimate_all_is_consistent(gamma_model, trunc):
    """
    On a long stationary path every estimate lies near the truth (2, 0.25, 0.5).
    """
    path = simulate_path(gamma_model, 0.5, 100_000, 0.1, make_rng(51), trunc)
    estimates = estimate_all(path, 10)
    assert estimates.mu_hat == pytest.approx(2.0, abs=0.03)
    assert estimates.sigma2_hat == pytest.approx(0.25, abs=0.02)
    assert estimates.lambda1_hat == pytest.approx(0.5, abs=0.05)
    assert estimates.lambda2_hat == pytest.approx(0.5, abs=0.06)
