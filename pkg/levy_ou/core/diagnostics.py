"""
Model-fit diagnostics for a fitted Lévy-driven OU model: ACF comparison, one-step
residuals, the Ljung-Box test and one-step-ahead simulation bands.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator
from statsmodels.stats.diagnostic import acorr_ljungbox

from levy_ou.core.estimation import MomentEstimates, sample_acf
from levy_ou.core.simulation import LevyOUModel, sample_increment_integrals
from levy_ou.core.special_functions import RandomSource, chi_square_sf
from levy_ou.errors import ClampedEstimatorError, DegenerateVarianceError, DomainError
from levy_ou.types import SeriesTruncation, TimeSeries

logger = logging.getLogger(__name__)

BAND_QUANTILES = (0.025, 0.975)


class LjungBoxResult(BaseModel):
    statistic: float = Field(ge=0)
    lags: int = Field(ge=1)
    p_value: float = Field(ge=0, le=1)


class PredictionBand(BaseModel):
    """
    One-step-ahead predictions with simulation bounds.

    Entry i predicts the observation following history value i.

    Args:
        point (np.ndarray): Mean of the simulated next values.
        lower (np.ndarray): 2.5% empirical quantile.
        upper (np.ndarray): 97.5% empirical quantile.
        n_paths (int): Simulated next values per step.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_paths: int = Field(ge=2)

    @model_validator(mode="after")
    def _same_length(self) -> "PredictionBand":
        if not (self.point.shape == self.lower.shape == self.upper.shape):
            raise ValueError("point, lower and upper must have the same length")
        return self

    @field_serializer("point", "lower", "upper")
    def _serialize_array(self, value: np.ndarray) -> list[float]:
        return value.tolist()

    def __len__(self) -> int:
        return int(self.point.size)


def theoretical_acf(lambda_: float, delta: float, d: int) -> np.ndarray:
    """
    Model autocorrelations exp(-lambda h delta) for h = 1..d.

    Raises:
        DomainError: If `d` < 1 or `lambda_` < 0.
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if lambda_ < 0:
        raise DomainError(f"lambda must be >= 0, got {lambda_}")
    return np.exp(-lambda_ * delta * np.arange(1, d + 1))


def acf_comparison(estimates: MomentEstimates, d: int | None = None) -> list[dict]:
    """
    Empirical against model-implied autocorrelations at lags 1..d.

    The model ACF uses lambda_hat_2.

    Returns:
        list[dict]: One `{"lag", "empirical", "theoretical"}` entry per lag.
    """
    d = estimates.acf.d if d is None else d
    empirical = estimates.acf.rho[1 : d + 1]
    model = theoretical_acf(estimates.lambda2_hat, estimates.delta, d)
    return [
        {"lag": h, "empirical": float(e), "theoretical": float(t)}
        for h, e, t in zip(range(1, d + 1), empirical, model)
    ]


def residuals(series: TimeSeries, estimates: MomentEstimates) -> np.ndarray:
    """
    One-step conditional-mean residuals of the fitted OU recursion.

    r_i = Y_{i+1} - e^{-lambda delta} Y_i - mu (1 - e^{-lambda delta}), i = 1..n-1, with
    lambda = lambda_hat_2 and mu = mu_hat.

    Raises:
        DomainError: If the series has fewer than two observations.
        ClampedEstimatorError: If lambda_hat_2 is clamped at 0.
    """
    if len(series) < 2:
        raise DomainError("residuals need at least two observations")
    if estimates.lambda2.clamped:
        raise ClampedEstimatorError(
            "lambda estimate is clamped at 0; the fitted recursion has no residuals"
        )
    decay = math.exp(-estimates.lambda2_hat * series.delta)
    y = series.values
    return y[1:] - decay * y[:-1] - estimates.mu_hat * (1.0 - decay)


def residual_acf(x: np.ndarray, lags: int) -> np.ndarray:
    """Sample autocorrelations of a residual series at lags 0..lags."""
    return sample_acf(TimeSeries(values=x, delta=1.0), lags).rho


def ljung_box(x: np.ndarray, m: int) -> LjungBoxResult:
    """
    Ljung-Box portmanteau test Q = n (n + 2) sum_{k=1}^{m} rho_k^2 / (n - k).

    The p-value uses m degrees of freedom (no parameter correction). Squared residuals
    are the caller's choice of input.

    Args:
        x (np.ndarray): Input sequence.
        m (int): Number of lags, 1 <= m < len(x).

    Returns:
        LjungBoxResult: Statistic, lags and p-value.

    Raises:
        DomainError: If `m` is out of range.
        DegenerateVarianceError: If the input has zero variance.
    """
    x = np.asarray(x, dtype=float)
    if not 1 <= m < x.size:
        raise DomainError(f"m must satisfy 1 <= m < n={x.size}, got {m}")
    if np.ptp(x) == 0:
        raise DegenerateVarianceError("Ljung-Box test needs a non-constant input")

    table = acorr_ljungbox(x, lags=[m], return_df=True)
    statistic = max(float(table["lb_stat"].iloc[-1]), 0.0)
    return LjungBoxResult(
        statistic=statistic, lags=m, p_value=chi_square_sf(statistic, m)
    )


def predict_one_step(
    model: LevyOUModel,
    lambda_: float,
    delta: float,
    history: TimeSeries,
    n_paths: int,
    rng: RandomSource,
    trunc: SeriesTruncation,
) -> PredictionBand:
    """
    Simulated one-step-ahead predictions for every observation of `history`.

    For each Y_i, `n_paths` values e^{-lambda delta} (Y_i + Z) are drawn with fresh
    increments Z. The point prediction is their mean and the band is given by their
    2.5% and 97.5% empirical quantiles (linear interpolation).

    Args:
        model (LevyOUModel): Fitted model.
        lambda_ (float): Mean-reversion rate, positive.
        delta (float): Time step.
        history (TimeSeries): Observed values to predict from.
        n_paths (int): Draws per step, at least 2.
        rng (RandomSource): Random source.
        trunc (SeriesTruncation): Series stopping rule.

    Returns:
        PredictionBand: One entry per history value.

    Raises:
        DomainError: If `n_paths` < 2 or the rate is not positive.
    """
    if n_paths < 2:
        raise DomainError(f"n_paths must be >= 2, got {n_paths}")

    n = len(history)
    logger.info("simulating %d x %d one-step values", n, n_paths)
    increments, exceeded = sample_increment_integrals(
        model, lambda_, delta, rng, trunc, n * n_paths, discounted=True
    )
    if exceeded.any():
        logger.warning(
            "%d of %d increments hit max_terms", int(exceeded.sum()), exceeded.size
        )

    decay = math.exp(-lambda_ * delta)
    draws = decay * history.values[:, None] + increments.reshape(n, n_paths)
    lower, upper = np.quantile(draws, BAND_QUANTILES, axis=1)
    return PredictionBand(
        point=draws.mean(axis=1), lower=lower, upper=upper, n_paths=n_paths
    )


def band_coverage(band: PredictionBand, realized: np.ndarray) -> float:
    """
    Fraction of realized next values inside the band.

    `realized[i]` is compared with band entry i; extra band entries (e.g. the forecast
    beyond the last observation) are ignored.
    """
    realized = np.asarray(realized, dtype=float)
    k = min(len(band), realized.size)
    if k == 0:
        raise DomainError("no realized values to compare with")
    inside = (band.lower[:k] <= realized[:k]) & (realized[:k] <= band.upper[:k])
    return float(np.mean(inside))

