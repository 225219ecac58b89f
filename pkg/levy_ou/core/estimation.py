"""
Method-of-moments estimators for Lévy-driven OU processes.

The stationary mean and variance of the process are mu and sigma2 / 2, and the ACF is
rho(h) = exp(-lambda h delta). The estimators invert these relations on the sample
moments: the sample mean, twice the sample variance, and either the log of the lag-one
autocorrelation or a least-squares fit of the first d autocorrelations.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, field_serializer
from scipy import optimize
from statsmodels.tsa.stattools import acovf

from levy_ou.config import DEFAULT_LAGS
from levy_ou.errors import DegenerateVarianceError, DomainError, EstimatorUndefinedError
from levy_ou.types import TimeSeries

logger = logging.getLogger(__name__)

LAMBDA_XTOL = 1e-8
_BRENT_XTOL = 1e-10


class AcfEstimate(BaseModel):
    """
    Sample autocovariances and autocorrelations for lags 0..d.

    Autocovariances use the 1/n normalization and are centered at the sample mean.

    Args:
        gamma_hat (np.ndarray): Autocovariances, length d + 1.
        rho_hat (np.ndarray | None): Autocorrelations, None for a zero-variance series.
        n (int): Sample size.
        d (int): Maximum lag.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    gamma_hat: np.ndarray
    rho_hat: np.ndarray | None
    n: int
    d: int

    @field_serializer("gamma_hat", "rho_hat")
    def _serialize_array(self, value: np.ndarray | None) -> list[float] | None:
        return None if value is None else value.tolist()

    @property
    def rho(self) -> np.ndarray:
        """
        Autocorrelations, lags 0..d.

        Raises:
            DegenerateVarianceError: If the sample variance is zero.
        """
        if self.rho_hat is None:
            raise DegenerateVarianceError(
                "autocorrelations are undefined for a zero-variance series"
            )
        return self.rho_hat


class LambdaEstimate(BaseModel):
    """
    Outcome of a mean-reversion estimator.

    Args:
        value (float | None): The estimate, None when undefined.
        clamped (bool, optional): The estimate was clamped at 0, which indicates
            nonstationary data. Defaults to False.
        undefined (bool, optional): The estimator has no value for this input.
            Defaults to False.
        bracket (tuple[float, float] | None, optional): Search interval of the
            optimizer, when one was used. Defaults to None.
    """

    value: float | None
    clamped: bool = False
    undefined: bool = False
    bracket: tuple[float, float] | None = None

    def require(self) -> float:
        """
        The estimate as a number.

        Raises:
            EstimatorUndefinedError: If the estimate is undefined.
        """
        if self.undefined or self.value is None:
            raise EstimatorUndefinedError("lambda estimator is undefined for this input")
        return self.value


class MomentEstimates(BaseModel):
    """
    The full set of moment estimates computed from one series.

    Args:
        mu_hat (float): Sample mean.
        sigma2_hat (float): Twice the lag-zero autocovariance.
        lambda1 (LambdaEstimate): Lag-one estimator.
        lambda2 (LambdaEstimate): Least-squares ACF estimator.
        acf (AcfEstimate): The ACF both were computed from.
        delta (float): Sampling step.
    """

    mu_hat: float
    sigma2_hat: float
    lambda1: LambdaEstimate
    lambda2: LambdaEstimate
    acf: AcfEstimate
    delta: float

    @property
    def lambda1_hat(self) -> float | None:
        return self.lambda1.value

    @property
    def lambda2_hat(self) -> float:
        return self.lambda2.require()

    @computed_field  # type: ignore[misc]
    @property
    def nonstationary_flag(self) -> bool:
        return self.lambda1.clamped or self.lambda2.clamped

    @property
    def n(self) -> int:
        return self.acf.n


def sample_mean(series: TimeSeries) -> float:
    """Arithmetic mean of the observations."""
    return float(np.mean(series.values))


def sample_acf(series: TimeSeries, d: int) -> AcfEstimate:
    """
    Sample autocovariance and autocorrelation up to lag `d`.

    gamma(h) = (1/n) * sum_{i=1}^{n-h} (Y_{i+h} - Ybar)(Y_i - Ybar), and
    rho(h) = gamma(h) / gamma(0).

    Args:
        series (TimeSeries): Observations.
        d (int): Maximum lag, 0 <= d < n.

    Returns:
        AcfEstimate: The estimates. `rho_hat` is None for a constant series.

    Raises:
        DomainError: If `d` is negative or not smaller than the series length.

    Example:
        ```python
        acf = sample_acf(TimeSeries(values=[0, 1, 0, 1], delta=1.0), d=1)
        acf.gamma_hat  # array([ 0.25  , -0.1875])
        acf.rho_hat  # array([ 1.  , -0.75])
        ```
    """
    n = len(series)
    if not 0 <= d < n:
        raise DomainError(f"lag d must satisfy 0 <= d < n={n}, got {d}")

    if np.ptp(series.values) == 0:
        gamma_hat = np.zeros(d + 1)
        return AcfEstimate(gamma_hat=gamma_hat, rho_hat=None, n=n, d=d)

    gamma_hat = acovf(series.values, adjusted=False, demean=True, fft=n > 256, nlag=d)
    gamma_hat = np.asarray(gamma_hat[: d + 1], dtype=float)
    if not gamma_hat[0] > 0:
        # variance underflowed
        return AcfEstimate(gamma_hat=np.zeros(d + 1), rho_hat=None, n=n, d=d)
    rho_hat = gamma_hat / gamma_hat[0]
    rho_hat[0] = 1.0
    return AcfEstimate(
        gamma_hat=gamma_hat, rho_hat=np.clip(rho_hat, -1.0, 1.0), n=n, d=d
    )


def sigma2_estimate(acf: AcfEstimate) -> float:
    """Twice the sample variance: the stationary variance is sigma2 / 2."""
    return 2.0 * float(acf.gamma_hat[0])


def max_lambda(delta: float) -> float:
    """Rate beyond which exp(-lambda * delta) is below machine epsilon."""
    return -math.log(np.finfo(float).eps) / delta


def acf_objective(lambda_: float, rho: np.ndarray, delta: float) -> float:
    """
    Squared distance between sample and model autocorrelations at lags 1..len(rho).

    Args:
        lambda_ (float): Candidate rate.
        rho (np.ndarray): Sample autocorrelations at lags 1..d (lag 0 excluded).
        delta (float): Sampling step.
    """
    lags = np.arange(1, len(rho) + 1)
    with np.errstate(over="ignore"):
        return float(np.sum((rho - np.exp(-lambda_ * lags * delta)) ** 2))


def lambda_hat_1(acf: AcfEstimate, delta: float) -> LambdaEstimate:
    """
    Lag-one estimator -log(rho(1)) / delta.

    rho(1) >= 1 gives 0 with the clamp flag; rho(1) <= 0 leaves the estimator undefined.

    Raises:
        DomainError: If the ACF has no lag one.
        DegenerateVarianceError: If the sample variance is zero.
    """
    if acf.d < 1:
        raise DomainError("lambda_hat_1 needs the autocorrelation at lag 1")
    rho1 = float(acf.rho[1])
    if rho1 <= 0:
        return LambdaEstimate(value=None, undefined=True)
    if rho1 >= 1:
        return LambdaEstimate(value=0.0, clamped=True)
    return LambdaEstimate(value=-math.log(rho1) / delta)


def lambda_hat_2(
    acf: AcfEstimate, d: int, delta: float, init: float | None = None
) -> LambdaEstimate:
    """
    Least-squares fit of exp(-lambda h delta) to the sample ACF at lags 1..d.

    The minimizer is bracketed downhill from `init` and refined with Brent's method
    (golden section with parabolic steps). When no bracket exists, e.g. because the
    objective keeps decreasing, a bounded search over [0, lambda_max] is used instead.
    A minimizer at or below zero is reported as 0 with the clamp flag set.

    Args:
        acf (AcfEstimate): Sample ACF with at least `d` lags.
        d (int): Number of lags, 1 <= d <= acf.d.
        delta (float): Sampling step.
        init (float | None, optional): Starting point. Defaults to the lag-one estimate,
            or the middle of [0, lambda_max] when that is undefined.

    Returns:
        LambdaEstimate: The estimate with the final search interval in `bracket`.

    Raises:
        DomainError: If `d` is out of range.
        DegenerateVarianceError: If the sample variance is zero.
    """
    if not 1 <= d <= acf.d:
        raise DomainError(f"d must satisfy 1 <= d <= {acf.d}, got {d}")

    rho = acf.rho[1 : d + 1]
    lam_max = max_lambda(delta)

    def objective(lam: float) -> float:
        return acf_objective(lam, rho, delta)

    if init is None:
        first = lambda_hat_1(acf, delta)
        init = 0.5 * lam_max if first.undefined else first.require()
    init = min(max(float(init), 0.0), lam_max)
    step = max(0.1 * init, 0.1 / delta)

    try:
        xa, xb, xc, fa, fb, fc, _ = optimize.bracket(
            objective, xa=init, xb=init + step, maxiter=200
        )
        if not (fb <= fa and fb <= fc and fb < max(fa, fc)):
            raise RuntimeError("no strict bracket")
        result = optimize.minimize_scalar(
            objective,
            bracket=(xa, xb, xc),
            method="brent",
            options={"xtol": _BRENT_XTOL},
        )
        bracket = (max(min(xa, xc), 0.0), min(max(xa, xc), lam_max))
    except (RuntimeError, ValueError):
        logger.info("no bracket around lambda=%g, searching [0, %g]", init, lam_max)
        result = optimize.minimize_scalar(
            objective,
            bounds=(0.0, lam_max),
            method="bounded",
            options={"xatol": LAMBDA_XTOL},
        )
        bracket = (0.0, lam_max)

    unrestricted = float(result.x)
    candidates = [min(max(x, 0.0), lam_max) for x in (unrestricted, init, *bracket)]
    best = min(candidates, key=objective)

    if unrestricted <= 0 or best <= 0 or objective(0.0) <= objective(best):
        return LambdaEstimate(value=0.0, clamped=True, bracket=bracket)
    return LambdaEstimate(value=best, bracket=bracket)


def estimate_all(series: TimeSeries, d: int = DEFAULT_LAGS) -> MomentEstimates:
    """
    Compute all moment estimates from one series with a shared ACF.

    Args:
        series (TimeSeries): Observations.
        d (int, optional): Number of ACF lags, 1 <= d < n. Defaults to 10.

    Returns:
        MomentEstimates: Mean, variance and both rate estimates.

    Raises:
        DomainError: If `d` is out of range.
        DegenerateVarianceError: If the series is constant.
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    acf = sample_acf(series, d)
    lambda1 = lambda_hat_1(acf, series.delta)
    lambda2 = lambda_hat_2(
        acf, d, series.delta, init=None if lambda1.undefined else lambda1.value
    )
    return MomentEstimates(
        mu_hat=sample_mean(series),
        sigma2_hat=sigma2_estimate(acf),
        lambda1=lambda1,
        lambda2=lambda2,
        acf=acf,
        delta=series.delta,
    )
