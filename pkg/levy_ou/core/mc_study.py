"""
Monte Carlo studies of the moment estimators.

Each path p of a study gets its own random stream (seed, p), so results do not depend
on scheduling: paths may run in worker processes and are reduced in path order.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np
from pydantic import BaseModel, Field, model_validator
from rich.table import Table
from scipy import stats

from levy_ou.config import DEFAULT_LAGS, SCHEMA_VERSION, Settings
from levy_ou.core.estimation import estimate_all
from levy_ou.core.simulation import LevyOUModel, simulate_path
from levy_ou.core.special_functions import make_rng
from levy_ou.errors import DomainError, LevyOUError
from levy_ou.types import Family, OUParams, SeriesTruncation

logger = logging.getLogger(__name__)

ESTIMATORS = ("mu", "sigma2", "lambda1", "lambda2")


class StudyConfig(BaseModel):
    """
    Settings of a Monte Carlo study.

    Args:
        family (Family): BDLP family.
        mu (float): True stationary mean.
        sigma2 (float): True variance of L_1.
        lambda_ (float): True mean-reversion rate, positive.
        n_obs (int): Observations per path, at least d + 2.
        delta (float): Sampling step.
        n_paths (int): Number of paths, at least 2.
        d (int, optional): ACF lags for lambda_hat_2. Defaults to 10.
        seed (int): Root seed; path p uses stream (seed, p).
        trunc (SeriesTruncation, optional): Series stopping rule.
    """

    family: Family = Family.GAMMA
    mu: float = Field(default=2.0, gt=0)
    sigma2: float = Field(default=0.25, gt=0)
    lambda_: float = Field(default=0.5, gt=0)
    n_obs: int = Field(default=1000, ge=1)
    delta: float = Field(default=0.1, gt=0)
    n_paths: int = Field(default=100, ge=2)
    d: int = Field(default=DEFAULT_LAGS, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    trunc: SeriesTruncation = SeriesTruncation()

    @model_validator(mode="after")
    def _enough_observations(self) -> "StudyConfig":
        if self.n_obs < self.d + 2:
            raise ValueError(f"n_obs must be >= d + 2 = {self.d + 2}")
        return self

    @property
    def params(self) -> OUParams:
        return OUParams(
            mu=self.mu, sigma2=self.sigma2, lambda_=self.lambda_, delta=self.delta
        )

    @property
    def theta0(self) -> tuple[float, float, float]:
        params = self.params
        return params.mu, params.sigma2, params.lambda_

    @property
    def model(self) -> LevyOUModel:
        return LevyOUModel.from_moments(self.family, self.mu, self.sigma2)


class PathEstimate(BaseModel):
    """Estimates from a single simulated path; `error` is set for excluded paths."""

    stream: int
    mu: float | None = None
    sigma2: float | None = None
    lambda1: float | None = None
    lambda2: float | None = None
    lambda1_undefined: bool = False
    lambda1_clamped: bool = False
    lambda2_clamped: bool = False
    truncated_increments: int = 0
    error: str | None = None


class EstimatorSummary(BaseModel):
    true_value: float
    mean: float | None
    std_error: float | None = Field(default=None, ge=0)
    count: int


class StudyReport(BaseModel):
    """
    Cross-path means and sample standard errors, shaped like the usual results table.

    Args:
        config (StudyConfig): The study settings, seed included.
        summaries (dict[str, EstimatorSummary]): Keyed by "mu", "sigma2", "lambda1",
            "lambda2".
        n_failed (int): Paths excluded because simulation or estimation failed.
        n_lambda1_undefined (int): Paths with rho_hat(1) <= 0.
        n_lambda1_clamped (int): Paths with lambda_hat_1 clamped at 0.
        n_lambda2_clamped (int): Paths with lambda_hat_2 clamped at 0.
        paths (list[PathEstimate]): Per-path estimates in stream order.
    """

    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    config: StudyConfig
    summaries: dict[str, EstimatorSummary]
    n_failed: int
    n_lambda1_undefined: int
    n_lambda1_clamped: int
    n_lambda2_clamped: int
    paths: list[PathEstimate]

    model_config = {"populate_by_name": True}


class CoordinateNormality(BaseModel):
    sd: float
    bias: float
    skewness: float
    excess_kurtosis: float
    ks_statistic: float
    ks_pvalue: float


class NormalityReport(BaseModel):
    """Normality checks of the standardized estimation errors, per coordinate."""

    n_reps: int
    n_obs: int
    coordinates: dict[str, CoordinateNormality]


def estimate_path(config: StudyConfig, stream: int) -> PathEstimate:
    """
    Simulate one path on stream (seed, `stream`) and estimate from it.

    Failures are returned as a `PathEstimate` with `error` set rather than raised.
    """
    rng = make_rng(config.seed, stream)
    try:
        series = simulate_path(
            config.model, config.lambda_, config.n_obs, config.delta, rng, config.trunc
        )
        estimates = estimate_all(series, config.d)
    except LevyOUError as e:
        logger.warning("path %d excluded: %s", stream, e)
        return PathEstimate(stream=stream, error=f"{type(e).__name__}: {e}")

    return PathEstimate(
        stream=stream,
        mu=estimates.mu_hat,
        sigma2=estimates.sigma2_hat,
        lambda1=estimates.lambda1.value,
        lambda2=estimates.lambda2.value,
        lambda1_undefined=estimates.lambda1.undefined,
        lambda1_clamped=estimates.lambda1.clamped,
        lambda2_clamped=estimates.lambda2.clamped,
        truncated_increments=series.metadata["truncation_budget_exceeded"],
    )


def _summarize(true_value: float, values: list[float]) -> EstimatorSummary:
    if not values:
        return EstimatorSummary(true_value=true_value, mean=None, count=0)
    array = np.asarray(values, dtype=float)
    std_error = float(np.std(array, ddof=1)) if array.size > 1 else None
    return EstimatorSummary(
        true_value=true_value,
        mean=float(array.mean()),
        std_error=std_error,
        count=array.size,
    )


def run_study(config: StudyConfig, workers: int | None = None) -> StudyReport:
    """
    Simulate `config.n_paths` independent paths and summarize the estimates.

    Args:
        config (StudyConfig): Study settings.
        workers (int | None, optional): Worker processes. Defaults to the
            `LEVY_OU_THREADS` setting; 1 runs in-process.

    Returns:
        StudyReport: Deterministic for a fixed config, whatever the number of workers.
    """
    if workers is None:
        workers = Settings.from_env().workers
    streams = range(1, config.n_paths + 1)
    logger.info(
        "running %d %s-OU paths of %d observations on %d worker(s)",
        config.n_paths,
        config.family.value,
        config.n_obs,
        workers,
    )

    job = partial(estimate_path, config)
    if workers <= 1:
        paths = [job(stream) for stream in streams]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunksize = max(1, config.n_paths // (4 * workers))
            paths = list(executor.map(job, streams, chunksize=chunksize))

    ok = [p for p in paths if p.error is None]
    true_values = {
        "mu": config.mu,
        "sigma2": config.sigma2,
        "lambda1": config.lambda_,
        "lambda2": config.lambda_,
    }
    summaries = {
        name: _summarize(
            true_values[name],
            [getattr(p, name) for p in ok if getattr(p, name) is not None],
        )
        for name in ESTIMATORS
    }

    return StudyReport(
        config=config,
        summaries=summaries,
        n_failed=len(paths) - len(ok),
        n_lambda1_undefined=sum(p.lambda1_undefined for p in ok),
        n_lambda1_clamped=sum(p.lambda1_clamped for p in ok),
        n_lambda2_clamped=sum(p.lambda2_clamped for p in ok),
        paths=paths,
    )


def clt_check(
    config: StudyConfig, n_reps: int, workers: int | None = None
) -> NormalityReport:
    """
    Check asymptotic normality of (mu_hat, sigma2_hat, lambda2_hat) by simulation.

    Runs `n_reps` replications and standardizes each coordinate's errors by their
    cross-replication standard deviation: z = (theta_hat - theta0) / sd. Reports
    skewness, excess kurtosis and the one-sample KS statistic against N(0, 1).

    Raises:
        DomainError: If `n_reps` < 100.
    """
    if n_reps < 100:
        raise DomainError(f"n_reps must be >= 100, got {n_reps}")
    report = run_study(config.model_copy(update={"n_paths": n_reps}), workers=workers)
    ok = [p for p in report.paths if p.error is None]

    coordinates = {}
    for name, true_value in zip(("mu", "sigma2", "lambda2"), config.theta0):
        values = np.array([getattr(p, name) for p in ok], dtype=float)
        sd = float(np.std(values, ddof=1))
        z = (values - true_value) / sd
        ks = stats.kstest(z, "norm")
        coordinates[name] = CoordinateNormality(
            sd=sd,
            bias=float(values.mean() - true_value),
            skewness=float(stats.skew(z)),
            excess_kurtosis=float(stats.kurtosis(z, fisher=True)),
            ks_statistic=float(ks.statistic),
            ks_pvalue=float(ks.pvalue),
        )

    return NormalityReport(n_reps=len(ok), n_obs=config.n_obs, coordinates=coordinates)


def format_table(report: StudyReport) -> Table:
    """Four-row table: true value, mean estimate and sample standard error."""
    labels = {
        "mu": ("mu", "-"),
        "sigma2": ("sigma^2", "-"),
        "lambda1": ("lambda", "lambda_hat = lambda_hat_1"),
        "lambda2": ("lambda", "lambda_hat = lambda_hat_2"),
    }
    config = report.config
    table = Table(
        title=(
            f"{config.family.value}-OU, theta0=({config.mu:g}, {config.sigma2:g},"
            f" {config.lambda_:g}), n={config.n_obs}, delta={config.delta:g},"
            f" {config.n_paths} paths"
        ),
        show_header=True,
        header_style="bold",
    )
    for column in ("True Values", "Est. Values", "Sample Std. Error", "Comments"):
        table.add_column(column)

    for name in ESTIMATORS:
        summary = report.summaries[name]
        label, comment = labels[name]
        table.add_row(
            f"{label}={summary.true_value:g}",
            "-" if summary.mean is None else f"{summary.mean:.7g}",
            "-" if summary.std_error is None else f"{summary.std_error:.7g}",
            comment,
        )
    return table
