"""
Asymptotic covariance of the moment estimators.

psi = (mu, gamma(0), ..., gamma(d)) is asymptotically normal with covariance Sigma, the
long-run covariance of Z_i = (Y_i, (Y_i - mu)^2, (Y_{i+1} - mu)(Y_i - mu), ...,
(Y_{i+d} - mu)(Y_i - mu)). Sigma is estimated by a Bartlett-weighted (Newey-West) sum of
sample autocovariances of the Z rows, and propagated to rho and to
theta = (mu, sigma2, lambda2) with the delta method.
"""

import logging
import math
import warnings
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import optimize
from statsmodels.stats.sandwich_covariance import S_hac_simple, weights_bartlett

from levy_ou.config import DEFAULT_CI_LEVEL
from levy_ou.core.estimation import (
    AcfEstimate,
    MomentEstimates,
    lambda_hat_2,
    sample_acf,
    sample_mean,
)
from levy_ou.core.special_functions import normal_quantile
from levy_ou.errors import (
    ClampedEstimatorError,
    CovarianceClippingWarning,
    DegenerateVarianceError,
    DomainError,
    EstimatorUndefinedError,
)
from levy_ou.types import Interval, TimeSeries

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-12
_IMPLICIT_DENOM_MIN = 1e-12
_FD_REL_STEP = 1e-6
_BRACKET_DOUBLINGS = 60
# keeps the plug-in bandwidth finite for near unit-root series
_MAX_PLUGIN_RHO = 0.99

THETA_NAMES = ("mu", "sigma2", "lambda")


class PsiVector(BaseModel):
    """
    (mu_hat, gamma_hat(0), ..., gamma_hat(d)), length d + 2.

    Args:
        entries (np.ndarray): The vector.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _check_entries(cls, value) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        if value.ndim != 1 or value.size < 2:
            raise ValueError("psi needs at least (mu, gamma(0))")
        if value[1] < 0:
            raise ValueError("gamma(0) must be nonnegative")
        return value

    @property
    def d(self) -> int:
        return self.entries.size - 2

    @property
    def mu(self) -> float:
        return float(self.entries[0])

    @property
    def gamma(self) -> np.ndarray:
        return self.entries[1:]


class CovMatrix(BaseModel):
    """
    A dense symmetric covariance matrix.

    Args:
        matrix (np.ndarray): Square matrix, symmetric to 1e-12.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _check_symmetric(cls, value) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        if value.ndim != 2 or value.shape[0] != value.shape[1]:
            raise ValueError("covariance matrix must be square")
        scale = max(1.0, float(np.max(np.abs(value)))) if value.size else 1.0
        if np.max(np.abs(value - value.T), initial=0.0) > _SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix must be symmetric")
        return 0.5 * (value + value.T)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def std_errors(self, n: int) -> np.ndarray:
        """sqrt(diag / n), the standard errors of an estimator on n observations."""
        return np.sqrt(np.clip(np.diag(self.matrix), 0.0, None) / n)

    def tolist(self) -> list[list[float]]:
        return self.matrix.tolist()


class InferenceResult(BaseModel):
    """
    Covariances and intervals for one fitted series.

    Args:
        sigma (CovMatrix): Estimated covariance of psi.
        sigma_theta (CovMatrix): Covariance of (mu, sigma2, lambda2).
        intervals (dict[str, Interval]): Per-parameter confidence intervals.
        level (float): Confidence level.
        bandwidth (int): Bartlett bandwidth used for sigma.
    """

    sigma: CovMatrix
    sigma_theta: CovMatrix
    intervals: dict[str, Interval]
    level: float
    bandwidth: int


def default_bandwidth(n: int, rho1: float | None = None) -> int:
    """
    Bartlett bandwidth for the long-run covariance of the Z rows.

    Without `rho1` this is the Newey-West rule of thumb floor(4 (n / 100)^(2/9)). Given the
    lag-one autocorrelation of the series it is the larger of that rule and the AR(1)
    plug-in ceil(1.1447 (alpha n)^(1/3)), alpha = 4 rho^2 / ((1 - rho)^2 (1 + rho)^2),
    which grows with the persistence of the series.

    Example:
        ```python
        default_bandwidth(1000)  # 6
        default_bandwidth(1000, math.exp(-0.05))  # 85
        ```
    """
    rule = int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))
    if rho1 is None:
        return rule
    rho = min(max(float(rho1), 0.0), _MAX_PLUGIN_RHO)
    alpha = 4.0 * rho**2 / ((1.0 - rho) ** 2 * (1.0 + rho) ** 2)
    return max(rule, int(math.ceil(1.1447 * (alpha * n) ** (1.0 / 3.0))))


def _series_bandwidth(series: TimeSeries, rho1: float | None, usable: int) -> int:
    if rho1 is None and len(series) > 1:
        acf = sample_acf(series, 1)
        rho1 = None if acf.rho_hat is None else float(acf.rho_hat[1])
    bandwidth = min(default_bandwidth(len(series), rho1), usable - 1)
    logger.debug("bartlett bandwidth %d (rho1=%s)", bandwidth, rho1)
    return bandwidth


def psi_vector(series: TimeSeries, d: int) -> PsiVector:
    acf = sample_acf(series, d)
    return PsiVector(entries=np.concatenate([[sample_mean(series)], acf.gamma_hat]))


def z_series(series: TimeSeries, d: int) -> np.ndarray:
    """
    Rows Z_i for i = 1..n-d with the sample mean plugged in for mu.

    Returns:
        np.ndarray: Array of shape (n - d, d + 2).

    Raises:
        DomainError: If `d` is not smaller than the series length.
    """
    y = series.values
    n = y.size
    if not 0 <= d < n:
        raise DomainError(f"lag d must satisfy 0 <= d < n={n}, got {d}")
    centered = y - y.mean()
    usable = n - d
    rows = np.empty((usable, d + 2))
    rows[:, 0] = y[:usable]
    for h in range(d + 1):
        rows[:, 1 + h] = centered[h : h + usable] * centered[:usable]
    return rows


def _clip_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    if eigenvalues.min(initial=0.0) >= 0:
        return matrix
    n_negative = int(np.sum(eigenvalues < 0))
    warnings.warn(
        f"clipped {n_negative} negative eigenvalue(s) of the covariance estimate",
        CovarianceClippingWarning,
        stacklevel=3,
    )
    logger.warning("clipped %d negative eigenvalue(s) of Sigma", n_negative)
    clipped = (eigenvectors * np.clip(eigenvalues, 0.0, None)) @ eigenvectors.T
    return 0.5 * (clipped + clipped.T)


def estimate_sigma(
    series: TimeSeries, d: int, bandwidth: int | None = None
) -> CovMatrix:
    """
    Plug-in long-run covariance of the Z rows.

    Sigma = C(0) + sum_{j=1}^{L} (1 - j / (L + 1)) (C(j) + C(j)^T), with C(j) the lag-j
    sample cross-covariance of the rows and L the bandwidth. Negative eigenvalues are
    clipped to zero with a `CovarianceClippingWarning`.

    Args:
        series (TimeSeries): Observations.
        d (int): Maximum ACF lag.
        bandwidth (int | None, optional): Bartlett bandwidth L. Defaults to
            `default_bandwidth(n, rho1)` with the sample lag-one autocorrelation, capped
            below the number of rows.

    Returns:
        CovMatrix: (d + 2) x (d + 2) matrix.

    Raises:
        DomainError: If the bandwidth is not smaller than the number of rows.
    """
    rows = z_series(series, d)
    usable = rows.shape[0]
    if bandwidth is None:
        bandwidth = _series_bandwidth(series, None, usable)
    if not 0 <= bandwidth < usable:
        raise DomainError(
            f"bandwidth must satisfy 0 <= bandwidth < n - d = {usable}, got {bandwidth}"
        )

    centered = rows - rows.mean(axis=0)
    sigma = S_hac_simple(centered, nlags=bandwidth, weights_func=weights_bartlett)
    sigma = np.asarray(sigma, dtype=float) / usable
    sigma = 0.5 * (sigma + sigma.T)
    return CovMatrix(matrix=_clip_eigenvalues(sigma))


def _check_variance(psi: PsiVector) -> float:
    gamma0 = float(psi.gamma[0])
    if gamma0 <= 0:
        raise DegenerateVarianceError("gamma(0) must be positive for the delta method")
    return gamma0


def rho_jacobian(psi: PsiVector) -> np.ndarray:
    """
    Jacobian of (mu, gamma(0..d)) -> (rho(0..d)), shape (d + 1, d + 2).

    The row for rho(0) is zero since rho(0) is identically one.
    """
    gamma0 = _check_variance(psi)
    gamma = psi.gamma
    jacobian = np.zeros((psi.d + 1, psi.d + 2))
    for h in range(1, psi.d + 1):
        jacobian[h, 1] = -gamma[h] / gamma0**2
        jacobian[h, 1 + h] = 1.0 / gamma0
    return jacobian


def sigma_rho(sigma: CovMatrix, psi: PsiVector) -> CovMatrix:
    """
    Asymptotic covariance of the sample ACF, J Sigma J^T.

    Raises:
        DegenerateVarianceError: If gamma(0) <= 0.
    """
    jacobian = rho_jacobian(psi)
    return CovMatrix(matrix=jacobian @ sigma.matrix @ jacobian.T)


def _acf_from_psi(psi: PsiVector) -> AcfEstimate:
    gamma0 = _check_variance(psi)
    return AcfEstimate(
        gamma_hat=psi.gamma.copy(),
        rho_hat=psi.gamma / gamma0,
        n=0,
        d=psi.d,
    )


def _fitted_lambda(psi: PsiVector, d: int, delta: float) -> float:
    estimate = lambda_hat_2(_acf_from_psi(psi), d, delta)
    if estimate.clamped:
        raise ClampedEstimatorError(
            "lambda estimate is clamped at 0; the delta method does not apply there"
        )
    return estimate.require()


def lambda_sensitivity(rho: np.ndarray, lambda_: float, delta: float) -> np.ndarray:
    """
    d lambda_hat / d rho(h) for h = 1..d by implicit differentiation of the
    first-order condition sum_h (rho(h) - e_h) h delta e_h = 0, e_h = exp(-lambda h delta).

    Returns:
        np.ndarray: Sensitivities, or an array of NaN when the condition is degenerate.
    """
    hd = np.arange(1, len(rho) + 1) * delta
    e = np.exp(-lambda_ * hd)
    denominator = float(np.sum(hd**2 * e * (2.0 * e - rho)))
    if abs(denominator) < _IMPLICIT_DENOM_MIN:
        return np.full(len(rho), np.nan)
    return -hd * e / denominator


def _stationary_lambda(rho: np.ndarray, delta: float, guess: float) -> float:
    hd = np.arange(1, len(rho) + 1) * delta

    def condition(lam: float) -> float:
        e = np.exp(-lam * hd)
        return float(np.sum((rho - e) * hd * e))

    lower, upper = 0.9 * guess, 1.1 * guess
    for _ in range(_BRACKET_DOUBLINGS):
        if condition(lower) < 0 < condition(upper):
            break
        lower, upper = 0.5 * lower, 2.0 * upper
    else:
        raise EstimatorUndefinedError(
            f"no root of the rate condition between {lower:g} and {upper:g}"
        )
    return optimize.brentq(condition, lower, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def numeric_jacobian(
    func: Callable[[np.ndarray], np.ndarray], point: np.ndarray, scale: np.ndarray
) -> np.ndarray:
    """Central finite differences with step 1e-6 * scale per coordinate."""
    point = np.asarray(point, dtype=float)
    columns = []
    for j in range(point.size):
        step = _FD_REL_STEP * scale[j]
        forward, backward = point.copy(), point.copy()
        forward[j] += step
        backward[j] -= step
        columns.append((np.asarray(func(forward)) - np.asarray(func(backward))) / (2 * step))
    return np.column_stack(columns)


def _psi_scale(psi: PsiVector) -> np.ndarray:
    gamma0 = float(psi.gamma[0])
    return np.concatenate([[max(abs(psi.mu), 1.0)], np.full(psi.d + 1, gamma0)])


def theta_jacobian_numeric(psi: PsiVector, d: int, delta: float) -> np.ndarray:
    """
    Central-difference Jacobian of (mu, gamma) -> (mu, 2 gamma(0), lambda_hat_2).

    lambda_hat_2 is re-solved at each perturbed point from its first-order condition,
    started at the unperturbed estimate.
    """
    lam = _fitted_lambda(psi, d, delta)

    def theta(entries: np.ndarray) -> np.ndarray:
        rho = entries[2 : d + 2] / entries[1]
        return np.array(
            [entries[0], 2.0 * entries[1], _stationary_lambda(rho, delta, lam)]
        )

    return numeric_jacobian(theta, psi.entries, _psi_scale(psi))


def theta_jacobian(psi: PsiVector, d: int, delta: float) -> np.ndarray:
    """
    Jacobian of (mu, gamma(0..d)) -> (mu, 2 gamma(0), lambda_hat_2), shape (3, d + 2).

    The lambda row chains the implicit-differentiation sensitivities through
    rho(h) = gamma(h) / gamma(0); it falls back to finite differences when the
    first-order condition is degenerate.

    Raises:
        DomainError: If `d` exceeds the lags in `psi`.
        ClampedEstimatorError: If lambda_hat_2 is clamped at 0.
    """
    if not 1 <= d <= psi.d:
        raise DomainError(f"d must satisfy 1 <= d <= {psi.d}, got {d}")
    gamma0 = _check_variance(psi)
    lam = _fitted_lambda(psi, d, delta)
    gamma = psi.gamma
    rho = gamma[1 : d + 1] / gamma0

    sensitivity = lambda_sensitivity(rho, lam, delta)
    if np.isnan(sensitivity).any():
        logger.warning("degenerate first-order condition, using finite differences")
        return theta_jacobian_numeric(psi, d, delta)

    jacobian = np.zeros((3, psi.d + 2))
    jacobian[0, 0] = 1.0
    jacobian[1, 1] = 2.0
    jacobian[2, 1] = -np.sum(sensitivity * gamma[1 : d + 1]) / gamma0**2
    jacobian[2, 2 : d + 2] = sensitivity / gamma0
    return jacobian


def sigma_theta(sigma: CovMatrix, psi: PsiVector, d: int, delta: float) -> CovMatrix:
    """
    Asymptotic covariance of (mu_hat, sigma2_hat, lambda2_hat), J_H Sigma J_H^T.

    Raises:
        ClampedEstimatorError: If lambda_hat_2 is clamped at 0.
        DegenerateVarianceError: If gamma(0) <= 0.
    """
    jacobian = theta_jacobian(psi, d, delta)
    return CovMatrix(matrix=jacobian @ sigma.matrix @ jacobian.T)


def confidence_intervals(
    estimates: MomentEstimates, sigma_theta: CovMatrix, level: float = DEFAULT_CI_LEVEL
) -> dict[str, Interval]:
    """
    Normal-approximation intervals theta_i +- z sqrt(Sigma_theta(i, i) / n).

    Lower bounds for sigma2 and lambda are floored at 0.

    Args:
        estimates (MomentEstimates): Point estimates.
        sigma_theta (CovMatrix): 3 x 3 covariance from `sigma_theta`.
        level (float, optional): Confidence level in (0, 1). Defaults to 0.95.

    Returns:
        dict[str, Interval]: Intervals keyed by "mu", "sigma2" and "lambda".

    Raises:
        ClampedEstimatorError: If lambda_hat_2 is clamped at 0.
        DomainError: If `level` is outside (0, 1) or the matrix is not 3 x 3.
    """
    if estimates.lambda2.clamped:
        raise ClampedEstimatorError("no intervals for a clamped lambda estimate")
    if sigma_theta.dim != 3:
        raise DomainError("sigma_theta must be 3 x 3")
    z = normal_quantile(0.5 * (1.0 + level))

    theta = np.array([estimates.mu_hat, estimates.sigma2_hat, estimates.lambda2_hat])
    half_width = z * sigma_theta.std_errors(estimates.n)
    lower = theta - half_width
    upper = theta + half_width
    lower[1:] = np.maximum(lower[1:], 0.0)

    return {
        name: Interval(lower=float(lo), upper=float(up))
        for name, lo, up in zip(THETA_NAMES, lower, upper)
    }


def infer(
    series: TimeSeries,
    estimates: MomentEstimates,
    level: float = DEFAULT_CI_LEVEL,
    bandwidth: int | None = None,
) -> InferenceResult:
    """
    Estimate Sigma, propagate it to theta and build confidence intervals.

    Raises:
        ClampedEstimatorError: If lambda_hat_2 is clamped at 0.
    """
    d = estimates.acf.d
    if bandwidth is None:
        rho = estimates.acf.rho_hat
        rho1 = None if rho is None or d < 1 else float(rho[1])
        bandwidth = _series_bandwidth(series, rho1, len(series) - d)
    sigma = estimate_sigma(series, d, bandwidth)
    psi = PsiVector(entries=np.concatenate([[estimates.mu_hat], estimates.acf.gamma_hat]))
    cov_theta = sigma_theta(sigma, psi, d, series.delta)
    return InferenceResult(
        sigma=sigma,
        sigma_theta=cov_theta,
        intervals=confidence_intervals(estimates, cov_theta, level),
        level=level,
        bandwidth=bandwidth,
    )
