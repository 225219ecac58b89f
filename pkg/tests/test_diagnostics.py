import math

import numpy as np
import pytest

from levy_ou.core.diagnostics import (
    PredictionBand,
    acf_comparison,
    band_coverage,
    ljung_box,
    predict_one_step,
    residual_acf,
    residuals,
    theoretical_acf,
)
from levy_ou.core.estimation import AcfEstimate, LambdaEstimate, MomentEstimates, estimate_all
from levy_ou.core.simulation import simulate_path
from levy_ou.core.special_functions import make_rng
from levy_ou.errors import ClampedEstimatorError, DegenerateVarianceError, DomainError
from levy_ou.types import TimeSeries


def exact_estimates(lambda_: float = 0.5, clamped: bool = False) -> MomentEstimates:
    rho = np.exp(-lambda_ * 0.1 * np.arange(11))
    return MomentEstimates(
        mu_hat=2.0,
        sigma2_hat=0.25,
        lambda1=LambdaEstimate(value=lambda_),
        lambda2=LambdaEstimate(value=0.0 if clamped else lambda_, clamped=clamped),
        acf=AcfEstimate(gamma_hat=0.125 * rho, rho_hat=rho, n=1000, d=10),
        delta=0.1,
    )


def test_theoretical_acf():
    assert theoretical_acf(0.0, 0.1, 5) == pytest.approx(np.ones(5))
    assert theoretical_acf(0.176725, 1.0, 1)[0] == pytest.approx(0.8380, abs=1e-4)
    assert theoretical_acf(1e4, 1.0, 3) == pytest.approx(np.zeros(3), abs=1e-300)


@pytest.mark.parametrize("lambda_, d", [(-0.1, 3), (0.5, 0)])
def test_theoretical_acf_domain(lambda_, d):
    with pytest.raises(DomainError):
        theoretical_acf(lambda_, 0.1, d)


def test_acf_comparison_pairs():
    pairs = acf_comparison(exact_estimates(), 10)
    assert len(pairs) == 10
    assert [pair["lag"] for pair in pairs] == list(range(1, 11))
    for pair in pairs:
        assert pair["empirical"] == pytest.approx(pair["theoretical"])


def test_residuals_vanish_on_noiseless_recursion():
    decay = math.exp(-0.05)
    values = [3.0]
    for _ in range(99):
        values.append(decay * values[-1] + 2.0 * (1.0 - decay))
    series = TimeSeries(values=values, delta=0.1)
    resid = residuals(series, exact_estimates())
    assert resid.shape == (99,)
    assert resid == pytest.approx(np.zeros(99), abs=1e-12)


def test_residuals_are_centred(gamma_path):
    resid = residuals(gamma_path, estimate_all(gamma_path, 10))
    assert resid.size == len(gamma_path) - 1
    assert abs(resid.mean()) < 3 * resid.std() / math.sqrt(resid.size)


def test_residuals_need_interior_rate(gamma_path):
    with pytest.raises(ClampedEstimatorError):
        residuals(gamma_path, exact_estimates(clamped=True))


def test_residuals_need_two_observations():
    with pytest.raises(DomainError):
        residuals(TimeSeries(values=[1.0], delta=0.1), exact_estimates())


def test_residual_acf(gamma_path):
    acf = residual_acf(gamma_path.values, 5)
    assert acf.shape == (6,)
    assert acf[0] == 1.0


def test_ljung_box_constant_input():
    with pytest.raises(DegenerateVarianceError):
        ljung_box(np.full(50, 1.5), 5)


def test_ljung_box_periodic_input():
    result = ljung_box(np.tile([0.0, 1.0], 50), 2)
    assert result.lags == 2
    assert result.statistic > 100
    assert result.p_value < 1e-10


def test_ljung_box_lag_range():
    x = make_rng(81).standard_normal(10)
    for m in (0, 10):
        with pytest.raises(DomainError):
            ljung_box(x, m)


def test_ljung_box_white_noise_is_not_rejected():
    result = ljung_box(make_rng(82).standard_normal(2000), 10)
    assert 0.0 <= result.p_value <= 1.0
    assert result.p_value > 0.001


@pytest.mark.slow
def test_ljung_box_size():
    """
    On iid Gaussian input the 5% test rejects at a rate between 3% and 7%.
    """
    rejections = 0
    for rep in range(1000):
        x = make_rng(83, rep).standard_normal(500)
        rejections += ljung_box(x, 10).p_value < 0.05
    assert 0.03 <= rejections / 1000 <= 0.07


def test_predict_one_step_needs_two_paths(gamma_model, trunc):
    history = TimeSeries(values=[2.0], delta=0.1)
    with pytest.raises(DomainError):
        predict_one_step(gamma_model, 0.5, 0.1, history, 1, make_rng(0), trunc)


def test_predict_one_step_conditional_mean(gamma_model, trunc):
    """
    The point prediction approaches E[Y_next | Y] = e^{-lambda delta} Y + mu (1 - e^{-lambda delta}).
    """
    history = TimeSeries(values=[2.0, 3.0], delta=0.1)
    band = predict_one_step(gamma_model, 0.5, 0.1, history, 10_000, make_rng(84), trunc)
    decay = math.exp(-0.05)
    expected = decay * history.values + 2.0 * (1.0 - decay)
    assert band.point == pytest.approx(expected, abs=0.005)
    assert len(band) == 2
    assert band.n_paths == 10_000


def test_predict_one_step_band_ordering(gamma_model, trunc, gamma_path):
    history = TimeSeries(values=gamma_path.values[:100], delta=0.1)
    band = predict_one_step(gamma_model, 0.5, 0.1, history, 50, make_rng(85), trunc)
    assert np.all(band.lower <= band.point)
    assert np.all(band.point <= band.upper)
    # the decayed history is a floor for every draw
    assert np.all(band.lower >= math.exp(-0.05) * history.values)


def test_predict_one_step_is_deterministic(gamma_model, trunc):
    history = TimeSeries(values=[1.5, 2.5], delta=0.1)
    first = predict_one_step(gamma_model, 0.5, 0.1, history, 20, make_rng(9), trunc)
    second = predict_one_step(gamma_model, 0.5, 0.1, history, 20, make_rng(9), trunc)
    assert first.model_dump() == second.model_dump()


def test_predict_one_step_coverage(gamma_model, trunc):
    path = simulate_path(gamma_model, 0.5, 500, 0.1, make_rng(86), trunc)
    band = predict_one_step(gamma_model, 0.5, 0.1, path, 200, make_rng(87), trunc)
    assert 0.90 <= band_coverage(band, path.values[1:]) <= 0.99


def test_band_coverage():
    band = PredictionBand(
        point=np.array([1.0, 2.0, 3.0]),
        lower=np.array([0.5, 1.5, 2.5]),
        upper=np.array([1.5, 2.5, 3.5]),
        n_paths=10,
    )
    assert band_coverage(band, [1.0, 3.0]) == 0.5
    assert band_coverage(band, [1.5, 1.5, 2.5]) == 1.0
    with pytest.raises(DomainError):
        band_coverage(band, [])


def test_prediction_band_lengths_must_match():
    with pytest.raises(ValueError):
        PredictionBand(
            point=np.zeros(2), lower=np.zeros(3), upper=np.zeros(2), n_paths=5
        )
