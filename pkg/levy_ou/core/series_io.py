"""
CSV input and output of time series.

Series files hold a `value` column and optionally a `time` column. Files are written as
UTF-8 with LF line endings and `%.17g` numbers, so a write-then-read round trip is exact.
"""

import logging
import math
from collections.abc import Mapping
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from levy_ou.errors import InputDataError
from levy_ou.types import TimeSeries

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TIME_RTOL = 1e-9


def log_transform(values: ArrayLike) -> np.ndarray:
    """
    Natural log of strictly positive observations.

    Raises:
        InputDataError: If any value is not positive.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise InputDataError("log transform needs strictly positive values")
    return np.log(values)


def _time_step(times: np.ndarray, delta: float | None) -> float:
    if times.size < 2:
        if delta is None:
            raise InputDataError("a single time stamp does not determine the step")
        return delta

    steps = np.diff(times)
    step = float(steps.mean())
    if step <= 0:
        raise InputDataError("time column must be increasing")
    if not np.allclose(steps, step, rtol=TIME_RTOL, atol=0.0):
        raise InputDataError(
            f"time column is not equally spaced within relative tolerance {TIME_RTOL}"
        )
    if delta is not None and not math.isclose(step, delta, rel_tol=TIME_RTOL):
        raise InputDataError(f"time column step {step:g} does not match delta {delta:g}")
    return step


def read_series(
    path: str | Path, delta: float | None = None, log: bool = False
) -> TimeSeries:
    """
    Read a series from a CSV file.

    Args:
        path (str | Path): CSV file with a `value` column and an optional `time` column.
        delta (float | None, optional): Sampling step. Required unless a `time` column
            is present, in which case the step is inferred and cross-checked.
        log (bool, optional): Apply the natural log to the values. Defaults to False.

    Returns:
        TimeSeries: The observations.

    Raises:
        InputDataError: If the file is unreadable, empty or malformed.
    """
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except FileNotFoundError as e:
        raise InputDataError(f"no such file: {path}") from e
    except OSError as e:
        raise InputDataError(f"cannot read {path}: {e}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputDataError(f"cannot parse {path}: {e}") from e

    frame.columns = [str(column).strip() for column in frame.columns]
    if "value" not in frame.columns:
        raise InputDataError(f"{path} has no `value` column")
    if frame.empty:
        raise InputDataError(f"{path} has no observations")

    try:
        values = pd.to_numeric(frame["value"], errors="raise").to_numpy(dtype=float)
        times = (
            pd.to_numeric(frame["time"], errors="raise").to_numpy(dtype=float)
            if "time" in frame.columns
            else None
        )
    except (ValueError, TypeError) as e:
        raise InputDataError(f"non-numeric entry in {path}: {e}") from e

    if not np.all(np.isfinite(values)):
        raise InputDataError(f"{path} contains missing or non-finite values")

    if times is not None:
        delta = _time_step(times, delta)
    elif delta is None:
        raise InputDataError("delta is required when the file has no `time` column")
    if not delta > 0:
        raise InputDataError(f"delta must be positive, got {delta}")

    if log:
        values = log_transform(values)

    logger.info("read %d observations from %s", values.size, path)
    return TimeSeries(values=values, delta=delta, metadata={"source": str(path)})


def write_table(columns: Mapping[str, ArrayLike], path: str | Path) -> None:
    """Write equally long numeric columns to a CSV file, in the given order."""
    frame = pd.DataFrame({name: np.asarray(data) for name, data in columns.items()})
    frame.to_csv(
        path,
        index=False,
        float_format=FLOAT_FORMAT,
        encoding="utf-8",
        lineterminator="\n",
    )


def write_series(series: TimeSeries, path: str | Path) -> None:
    """Write a series as a single `value` column."""
    write_table({"value": series.values}, path)
    logger.info("wrote %d observations to %s", len(series), path)
