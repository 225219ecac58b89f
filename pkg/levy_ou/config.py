import logging
import os

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, field_validator

from levy_ou.errors import ConfigError

load_dotenv(find_dotenv(".env", usecwd=True))

SCHEMA_VERSION = 1

DEFAULT_LAGS = 10
DEFAULT_TAIL_TOL = 1e-10
DEFAULT_MAX_TERMS = 10_000
DEFAULT_N_PATHS = 50
DEFAULT_CI_LEVEL = 0.95


class Settings(BaseModel):
    """
    Runtime settings read from the environment (and a `.env` file, if present).

    Args:
        threads (int, optional): Cap on internal parallelism, from `LEVY_OU_THREADS`.
            0 means one worker per CPU, 1 runs everything serially. Defaults to 0.
        log_level (str, optional): Logging level name, from `LEVY_OU_LOG_LEVEL`.
            Defaults to "WARNING".
    """

    threads: int = 0
    log_level: str = "WARNING"

    @field_validator("threads")
    @classmethod
    def _check_threads(cls, value: int) -> int:
        if value < 0:
            raise ValueError("threads must be >= 0")
        return value

    @field_validator("log_level")
    @classmethod
    def _check_log_level(cls, value: str) -> str:
        value = value.upper()
        if not isinstance(logging.getLevelName(value), int):
            raise ValueError(f"unknown log level {value!r}")
        return value

    @property
    def workers(self) -> int:
        """Number of worker processes to use (>= 1)."""
        if self.threads == 0:
            return os.cpu_count() or 1
        return self.threads

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Build settings from `LEVY_OU_THREADS` and `LEVY_OU_LOG_LEVEL`.

        Raises:
            ConfigError: If a variable is set to an invalid value.
        """
        raw_threads = os.getenv("LEVY_OU_THREADS", "0").strip() or "0"
        try:
            return cls(
                threads=int(raw_threads),
                log_level=os.getenv("LEVY_OU_LOG_LEVEL", "WARNING"),
            )
        except ValueError as e:
            raise ConfigError(f"invalid environment configuration: {e}") from e
