import pytest

from levy_ou.core.estimation import LambdaEstimate
from levy_ou.core.simulation import LevyOUModel, simulate_path
from levy_ou.core.special_functions import make_rng
from levy_ou.demo.config import VOLATILITY_INDEX
from levy_ou.demo.pipeline import FitPipeline, get_pipeline
from levy_ou.errors import ClampedEstimatorError, DomainError
from levy_ou.types import Family


@pytest.fixture
def volatility_path(trunc):
    """A synthetic daily log-volatility-like gamma-OU path."""
    model = LevyOUModel.from_moments(
        VOLATILITY_INDEX["family"], VOLATILITY_INDEX["mu"], VOLATILITY_INDEX["sigma2"]
    )
    return simulate_path(
        model,
        VOLATILITY_INDEX["lambda_"],
        1500,
        VOLATILITY_INDEX["delta"],
        make_rng(101),
        trunc,
    )


def test_get_pipeline_defaults():
    pipeline = get_pipeline()
    assert isinstance(pipeline, FitPipeline)
    assert pipeline.family is Family.GAMMA
    assert pipeline.lags == 10
    assert pipeline.n_paths == 50


def test_report(volatility_path):
    report = get_pipeline().report(volatility_path, ci_level=0.9)
    assert report.n == 1500
    assert report.delta == 1.0
    assert report.mu_hat == pytest.approx(2.78, abs=0.05)
    assert report.lambda2_hat == pytest.approx(0.177, abs=0.12)
    assert len(report.acf["rho"]) == 11
    assert not report.nonstationary
    assert report.ci_level == 0.9
    assert set(report.intervals) == {"mu", "sigma2", "lambda"}


def test_report_with_clamped_rate_has_no_intervals(volatility_path, mocker):
    mocker.patch(
        "levy_ou.core.estimation.lambda_hat_2",
        return_value=LambdaEstimate(value=0.0, clamped=True),
    )
    report = get_pipeline().report(volatility_path, ci_level=0.95)
    assert report.nonstationary
    assert report.flags["lambda2_clamped"]
    assert report.intervals is None


def test_fitted_model_matches_moments(volatility_path):
    pipeline = get_pipeline(family=Family.INVERSE_GAUSSIAN)
    estimates = pipeline.fit(volatility_path)
    model, lambda_ = pipeline.fitted_model(estimates)
    assert model.family is Family.INVERSE_GAUSSIAN
    assert model.mean == pytest.approx(estimates.mu_hat)
    assert model.variance == pytest.approx(estimates.sigma2_hat / 2)
    assert lambda_ == estimates.lambda2_hat


def test_fitted_model_needs_interior_rate(volatility_path):
    pipeline = get_pipeline()
    estimates = pipeline.fit(volatility_path).model_copy(
        update={"lambda2": LambdaEstimate(value=0.0, clamped=True)}
    )
    with pytest.raises(ClampedEstimatorError):
        pipeline.fitted_model(estimates)


def test_diagnose(volatility_path):
    report = get_pipeline(lags=20).diagnose(volatility_path)
    assert len(report.acf_pairs) == 20
    assert len(report.residuals) == 1499
    assert len(report.residual_acf) == 21
    assert report.ljung_box.lags == 20
    assert report.model_dump(by_alias=True)["schema"] == 1


def test_predict_holdout(volatility_path):
    result = get_pipeline(n_paths=20).predict(volatility_path, make_rng(102), holdout=100)
    assert len(result.band) == 100
    assert len(result.realized) == 100
    assert result.fit_size == 1400
    assert result.realized[-1] == volatility_path.values[-1]
    assert 0.0 <= result.coverage <= 1.0


@pytest.mark.parametrize("holdout", [-1, 1489])
def test_predict_holdout_range(volatility_path, holdout):
    with pytest.raises(DomainError):
        get_pipeline().predict(volatility_path, make_rng(0), holdout=holdout)


@pytest.mark.slow
def test_fit_diagnose_predict(volatility_path):
    """
    Fitted on the whole series, the one-step bands cover 90-99% of the next values.
    """
    pipeline = get_pipeline(n_paths=200)
    diagnostics = pipeline.diagnose(volatility_path)
    assert diagnostics.ljung_box.p_value > 0.001

    result = pipeline.predict(volatility_path, make_rng(103))
    assert len(result.band) == 1500
    assert len(result.realized) == 1499
    assert 0.90 <= result.coverage <= 0.99
