"""
Exceptions and warnings raised across the package.

Every error a caller can act on derives from `LevyOUError`; the command-line surface maps
that family to exit code 3.
"""


class LevyOUError(Exception):
    """Base class for all package errors."""


class DomainError(LevyOUError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class DegenerateVarianceError(DomainError):
    """The sample variance is zero where a ratio by it is required."""


class EstimatorUndefinedError(LevyOUError):
    """The estimator has no value for this input (e.g. log of a nonpositive ACF)."""


class ClampedEstimatorError(LevyOUError):
    """An interior estimate was required but the estimator was clamped at the boundary."""


class InputDataError(LevyOUError):
    """Input data could not be read or is malformed."""


class ConfigError(LevyOUError):
    """Invalid configuration value in the environment."""


class TruncationWarning(UserWarning):
    """The series representation hit `max_terms` before reaching `tail_tol`."""


class CovarianceClippingWarning(UserWarning):
    """Negative eigenvalues of an estimated covariance matrix were clipped to zero."""
