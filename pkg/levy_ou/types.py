from datetime import datetime
from enum import Enum
from typing import Any

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from levy_ou.config import (
    DEFAULT_LAGS,
    DEFAULT_MAX_TERMS,
    DEFAULT_TAIL_TOL,
    SCHEMA_VERSION,
)


class Family(str, Enum):
    """Background driving Lévy process family with a closed-form stationary law."""

    GAMMA = "gamma"
    INVERSE_GAUSSIAN = "ig"


class OUParams(BaseModel):
    """
    The statistical parameters of a Lévy-driven OU process plus the sampling step.

    Args:
        mu (float): Mean of L_1, which is also the stationary mean of the process.
        sigma2 (float): Variance of L_1. The stationary variance is sigma2 / 2.
        lambda_ (float): Mean-reversion rate (1/time). Zero flags nonstationarity.
        delta (float): Sampling step.
    """

    model_config = ConfigDict(populate_by_name=True)

    mu: float
    sigma2: float = Field(gt=0)
    lambda_: float = Field(ge=0, alias="lambda")
    delta: float = Field(gt=0)


class SeriesTruncation(BaseModel):
    """
    Stopping rule for the shot-noise series of a Lévy integral.

    A draw stops at the first term whose upper bound falls below `tail_tol`, or after
    `max_terms` terms, whichever comes first.

    Args:
        max_terms (int, optional): Hard cap on the number of terms. Defaults to 10_000.
        tail_tol (float, optional): Tolerance on the term bound. Defaults to 1e-10.
    """

    max_terms: int = Field(default=DEFAULT_MAX_TERMS, ge=1)
    tail_tol: float = Field(default=DEFAULT_TAIL_TOL, gt=0)


class TimeSeries(BaseModel):
    """
    Equally spaced observations Y_0, Y_delta, Y_2delta, ...

    Args:
        values (np.ndarray): Observations, finite, at least one.
        delta (float): Sampling step.
        metadata (dict | None, optional): Free-form producer information, e.g. the
            number of truncated series draws in a simulated path. Defaults to None.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    delta: float = Field(gt=0)
    metadata: dict | None = None

    @field_validator("values", mode="before")
    @classmethod
    def _as_float_array(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=float)
        if array.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if array.size == 0:
            raise ValueError("a time series needs at least one observation")
        if not np.all(np.isfinite(array)):
            raise ValueError("values must be finite")
        return array

    @field_serializer("values")
    def _serialize_values(self, values: np.ndarray) -> list[float]:
        return values.tolist()

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.values > 0))


class RunManifest(BaseModel):
    """
    Everything needed to reproduce the output of a command.

    Args:
        command (str): Command name.
        parameters (dict): Full parameter set after defaults were applied.
        seed (int | None): Root seed, when the command draws random numbers.
        version (str): Package version.
        started_at (datetime): Start timestamp (UTC).
        finished_at (datetime | None): End timestamp (UTC).
        schema_version (int): Output schema version, serialized as `schema`.
        results (dict | None): Small command-specific summary (e.g. coverage).
    """

    model_config = ConfigDict(populate_by_name=True)

    command: str
    parameters: dict
    seed: int | None = None
    version: str
    started_at: datetime
    finished_at: datetime | None = None
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    results: dict | None = None


class SimulateRequest(BaseModel):
    """
    Body of a simulation request.

    Args:
        family (Family): BDLP family.
        mu (float): Stationary mean.
        sigma2 (float): Variance of L_1.
        lambda_ (float): Mean-reversion rate, serialized as `lambda`.
        n (int): Number of observations.
        delta (float): Sampling step.
        seed (int): Root seed.
        tail_tol (float, optional): Series tolerance. Defaults to 1e-10.
        max_terms (int, optional): Series budget. Defaults to 10_000.
    """

    model_config = ConfigDict(populate_by_name=True)

    family: Family
    mu: float = Field(gt=0)
    sigma2: float = Field(gt=0)
    lambda_: float = Field(gt=0, alias="lambda")
    n: int = Field(ge=1)
    delta: float = Field(gt=0)
    seed: int = Field(ge=0, lt=2**64)
    tail_tol: float = Field(default=DEFAULT_TAIL_TOL, gt=0)
    max_terms: int = Field(default=DEFAULT_MAX_TERMS, ge=1)

    @property
    def params(self) -> OUParams:
        return OUParams(
            mu=self.mu, sigma2=self.sigma2, lambda_=self.lambda_, delta=self.delta
        )


class EstimateRequest(BaseModel):
    """
    Body of an estimation request.

    Args:
        values (list[float]): Observations.
        delta (float): Sampling step.
        lags (int, optional): Number of ACF lags. Defaults to 10.
        ci_level (float | None, optional): Confidence level; intervals are only
            computed when given. Defaults to None.
    """

    values: list[float] = Field(min_length=1)
    delta: float = Field(gt=0)
    lags: int = Field(default=DEFAULT_LAGS, ge=1)
    ci_level: float | None = Field(default=None, gt=0, lt=1)


class Interval(BaseModel):
    lower: float
    upper: float


class EstimateReport(BaseModel):
    """
    JSON report of a moment fit.

    Args:
        mu_hat (float): Sample mean.
        sigma2_hat (float): Twice the sample variance.
        lambda1_hat (float | None): Lag-one estimator, None when undefined.
        lambda2_hat (float): Least-squares ACF estimator.
        acf (dict): `gamma` and `rho` arrays, lags 0..d.
        flags (dict): `lambda1_undefined`, `lambda1_clamped`, `lambda2_clamped`.
        nonstationary (bool): True when either estimator was clamped at zero.
        sigma_theta (list[list[float]] | None): Asymptotic covariance of
            (mu, sigma2, lambda2), when intervals were requested.
        intervals (dict[str, Interval] | None): Per-parameter intervals.
        ci_level (float | None): Level of the intervals.
        schema_version (int): Serialized as `schema`.
    """

    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    n: int
    delta: float
    lags: int
    mu_hat: float
    sigma2_hat: float
    lambda1_hat: float | None
    lambda2_hat: float
    acf: dict[str, list[float]]
    flags: dict[str, bool]
    nonstationary: bool
    sigma_theta: list[list[float]] | None = None
    intervals: dict[str, Interval] | None = None
    ci_level: float | None = None

    @model_validator(mode="after")
    def _intervals_need_level(self) -> "EstimateReport":
        if self.intervals is not None and self.ci_level is None:
            raise ValueError("ci_level is required when intervals are reported")
        return self
