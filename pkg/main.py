from datetime import datetime, timezone

import uvicorn
from dotenv import find_dotenv, load_dotenv
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from levy_ou import __version__
from levy_ou.config import SCHEMA_VERSION
from levy_ou.core.simulation import LevyOUModel, simulate_path
from levy_ou.core.special_functions import make_rng
from levy_ou.demo.pipeline import get_pipeline
from levy_ou.errors import LevyOUError
from levy_ou.types import (
    EstimateReport,
    EstimateRequest,
    RunManifest,
    SeriesTruncation,
    SimulateRequest,
    TimeSeries,
)

load_dotenv(find_dotenv(".env"))

# Initialize FastAPI
app = FastAPI()


@app.exception_handler(LevyOUError)
async def levy_ou_error_handler(request: Request, exc: LevyOUError) -> JSONResponse:
    """
    Reports package errors as HTTP 422 with the same error JSON the CLI prints.
    """
    return JSONResponse(
        status_code=422,
        content={
            "schema": SCHEMA_VERSION,
            "error": type(exc).__name__,
            "message": str(exc),
        },
    )


@app.get("/")
def root():
    """
    A function that reads the root path ("/") and returns a usage message.

    Returns:
        str: A string message pointing to the "/estimate" and "/simulate" paths.
    """
    return "POST a series to /estimate or simulation settings to /simulate."


@app.post("/estimate")
def estimate(request: EstimateRequest) -> EstimateReport:
    """
    Computes the moment estimates of a series, with intervals when a level is given.

    Args:
        request (EstimateRequest): The observations, sampling step, number of ACF lags
            and optional confidence level.

    Returns:
        EstimateReport: The same report as `levy-ou estimate`.
    """
    series = TimeSeries(values=request.values, delta=request.delta)
    pipeline = get_pipeline(lags=request.lags)
    return pipeline.report(series, ci_level=request.ci_level)


@app.post("/simulate")
def simulate(request: SimulateRequest) -> dict:
    """
    Simulates a stationary path.

    Args:
        request (SimulateRequest): Family, parameters, size, step, seed and truncation.

    Returns:
        dict: `values` of the path and the run `manifest`.
    """
    started_at = datetime.now(timezone.utc)
    params = request.params
    model = LevyOUModel.from_moments(request.family, params.mu, params.sigma2)
    series = simulate_path(
        model,
        params.lambda_,
        request.n,
        params.delta,
        make_rng(request.seed),
        SeriesTruncation(max_terms=request.max_terms, tail_tol=request.tail_tol),
    )
    manifest = RunManifest(
        command="simulate",
        parameters=request.model_dump(mode="json", by_alias=True),
        seed=request.seed,
        version=__version__,
        started_at=started_at,
        finished_at=datetime.now(timezone.utc),
        results={
            "truncation_budget_exceeded": series.metadata["truncation_budget_exceeded"]
        },
    )
    return {
        "values": series.values.tolist(),
        "manifest": manifest.model_dump(mode="json", by_alias=True),
    }


if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=8000)
