import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from levy_ou.config import DEFAULT_LAGS, DEFAULT_N_PATHS, SCHEMA_VERSION
from levy_ou.core.diagnostics import (
    LjungBoxResult,
    PredictionBand,
    acf_comparison,
    band_coverage,
    ljung_box,
    predict_one_step,
    residual_acf,
    residuals,
)
from levy_ou.core.estimation import MomentEstimates, estimate_all
from levy_ou.core.inference import infer
from levy_ou.core.simulation import LevyOUModel
from levy_ou.core.special_functions import RandomSource
from levy_ou.errors import ClampedEstimatorError, DomainError
from levy_ou.types import EstimateReport, Family, SeriesTruncation, TimeSeries

logger = logging.getLogger(__name__)


class DiagnosticsReport(BaseModel):
    """
    Fit diagnostics of one series.

    Args:
        family (Family): Family of the residual model.
        model (dict[str, float]): Parameters `a`, `b` of the fitted stationary law.
        mu_hat (float): Sample mean.
        sigma2_hat (float): Twice the sample variance.
        lambda1_hat (float | None): Lag-one estimator.
        lambda2_hat (float): Least-squares ACF estimator used by the residuals.
        acf_pairs (list[dict]): Empirical against model autocorrelations per lag.
        residuals (list[float]): One-step residuals.
        residual_acf (list[float]): Residual autocorrelations, lags 0..lags.
        ljung_box (LjungBoxResult): Test on the squared residuals.
    """

    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    family: Family
    model: dict[str, float]
    mu_hat: float
    sigma2_hat: float
    lambda1_hat: float | None
    lambda2_hat: float
    acf_pairs: list[dict]
    residuals: list[float]
    residual_acf: list[float]
    ljung_box: LjungBoxResult


class PredictionResult(BaseModel):
    """
    One-step-ahead band with the realized values it predicts, where known.

    Args:
        band (PredictionBand): Predictions, entry i predicts `realized[i]`.
        realized (list[float]): Observed next values; shorter than the band when the
            last entry forecasts past the data.
        coverage (float | None): Fraction of realized values inside the band.
        fit_size (int): Number of observations the model was fitted on.
    """

    band: PredictionBand
    realized: list[float]
    coverage: float | None
    fit_size: int


class FitPipeline(BaseModel):
    """
    Fit, diagnose and predict a Lévy-driven OU model on an observed series.

    Args:
        family (Family, optional): BDLP family of the fitted model. Defaults to gamma.
        lags (int, optional): Number of ACF lags. Defaults to 10.
        n_paths (int, optional): Simulated next values per prediction. Defaults to 50.
        trunc (SeriesTruncation, optional): Series stopping rule for predictions.
    """

    family: Family = Family.GAMMA
    lags: int = Field(default=DEFAULT_LAGS, ge=1)
    n_paths: int = Field(default=DEFAULT_N_PATHS, ge=2)
    trunc: SeriesTruncation = SeriesTruncation()

    def fit(self, series: TimeSeries) -> MomentEstimates:
        return estimate_all(series, self.lags)

    def report(
        self,
        series: TimeSeries,
        ci_level: float | None = None,
        bandwidth: int | None = None,
    ) -> EstimateReport:
        """
        Moment fit as a JSON-ready report, with intervals when `ci_level` is given.

        `bandwidth` is the Bartlett bandwidth of the covariance estimate; by default it
        grows with the lag-one autocorrelation of the series.

        A clamped rate is reported with `nonstationary` set and no intervals.
        """
        estimates = self.fit(series)
        report = EstimateReport(
            n=len(series),
            delta=series.delta,
            lags=self.lags,
            mu_hat=estimates.mu_hat,
            sigma2_hat=estimates.sigma2_hat,
            lambda1_hat=estimates.lambda1_hat,
            lambda2_hat=estimates.lambda2.require(),
            acf={
                "gamma": estimates.acf.gamma_hat.tolist(),
                "rho": estimates.acf.rho.tolist(),
            },
            flags={
                "lambda1_undefined": estimates.lambda1.undefined,
                "lambda1_clamped": estimates.lambda1.clamped,
                "lambda2_clamped": estimates.lambda2.clamped,
            },
            nonstationary=estimates.nonstationary_flag,
        )
        if estimates.nonstationary_flag:
            logger.warning("rate estimate clamped at 0: the data may be nonstationary")
        if ci_level is None:
            return report
        if estimates.lambda2.clamped:
            logger.warning("no confidence intervals for a clamped rate estimate")
            return report

        inference = infer(series, estimates, level=ci_level, bandwidth=bandwidth)
        return report.model_copy(
            update={
                "sigma_theta": inference.sigma_theta.tolist(),
                "intervals": inference.intervals,
                "ci_level": ci_level,
            }
        )

    def fitted_model(self, estimates: MomentEstimates) -> tuple[LevyOUModel, float]:
        """
        Stationary law and rate of the fitted model.

        Raises:
            ClampedEstimatorError: If the rate estimate is clamped at 0.
        """
        if estimates.lambda2.clamped:
            raise ClampedEstimatorError(
                "rate estimate clamped at 0: no stationary model to simulate from"
            )
        model = LevyOUModel.from_moments(
            self.family, estimates.mu_hat, estimates.sigma2_hat
        )
        return model, estimates.lambda2_hat

    def diagnose(self, series: TimeSeries) -> DiagnosticsReport:
        """
        ACF comparison, residuals and a Ljung-Box test on the squared residuals.

        Raises:
            ClampedEstimatorError: If the rate estimate is clamped at 0.
        """
        estimates = self.fit(series)
        model, _ = self.fitted_model(estimates)
        resid = residuals(series, estimates)
        lags = min(self.lags, resid.size - 1)
        if lags < 1:
            raise DomainError("too few observations for residual diagnostics")

        return DiagnosticsReport(
            family=self.family,
            model={"a": model.a, "b": model.b},
            mu_hat=estimates.mu_hat,
            sigma2_hat=estimates.sigma2_hat,
            lambda1_hat=estimates.lambda1_hat,
            lambda2_hat=estimates.lambda2_hat,
            acf_pairs=acf_comparison(estimates, self.lags),
            residuals=resid.tolist(),
            residual_acf=residual_acf(resid, lags).tolist(),
            ljung_box=ljung_box(resid**2, lags),
        )

    def predict(
        self, series: TimeSeries, rng: RandomSource, holdout: int = 0
    ) -> PredictionResult:
        """
        One-step-ahead prediction bands.

        With `holdout` = 0 the model is fitted on the whole series and every observation
        gets a prediction of its successor (the last one forecasts past the data). With
        `holdout` = K the model is fitted on all but the last K observations, which are
        then predicted one step at a time from their true predecessors.

        Raises:
            DomainError: If `holdout` leaves too few observations to fit.
            ClampedEstimatorError: If the rate estimate is clamped at 0.
        """
        n = len(series)
        if not 0 <= holdout < n - self.lags - 1:
            raise DomainError(
                f"holdout must satisfy 0 <= holdout < {n - self.lags - 1}, got {holdout}"
            )

        if holdout:
            fit_series = TimeSeries(values=series.values[: n - holdout], delta=series.delta)
            history = series.values[n - holdout - 1 : n - 1]
            realized = series.values[n - holdout :]
        else:
            fit_series = series
            history = series.values
            realized = series.values[1:]

        estimates = self.fit(fit_series)
        model, lambda_ = self.fitted_model(estimates)
        band = predict_one_step(
            model,
            lambda_,
            series.delta,
            TimeSeries(values=history, delta=series.delta),
            self.n_paths,
            rng,
            self.trunc,
        )
        coverage = band_coverage(band, realized) if realized.size else None
        if coverage is not None:
            logger.info("band coverage %.3f over %d values", coverage, realized.size)

        return PredictionResult(
            band=band,
            realized=np.asarray(realized).tolist(),
            coverage=coverage,
            fit_size=len(fit_series),
        )


def get_pipeline(
    family: Family = Family.GAMMA,
    lags: int = DEFAULT_LAGS,
    n_paths: int = DEFAULT_N_PATHS,
    trunc: SeriesTruncation | None = None,
) -> FitPipeline:
    return FitPipeline(
        family=family,
        lags=lags,
        n_paths=n_paths,
        trunc=trunc or SeriesTruncation(),
    )
