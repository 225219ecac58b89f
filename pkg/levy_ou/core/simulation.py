"""
Sample paths of gamma-OU and IG-OU processes.

A Lévy-driven OU process observed every `delta` satisfies

    Y_{t+delta} = exp(-lambda delta) * (Y_t + Z),    Z = int_0^{lambda delta} e^u dL_u,

where L is the background driving Lévy process (BDLP). Z is drawn from the shot-noise
series  sum_i G(alpha_i / T) * exp(T r_i)  with T = lambda * delta, G the inverse tail
mass of the BDLP's Lévy measure, alpha_i unit-rate Poisson arrivals and r_i uniforms.
For the gamma family the BDLP is compound Poisson and an exact sampler is available as
an oracle.
"""

import logging
import math
import warnings
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, Field
from scipy import signal

from levy_ou.core.special_functions import RandomSource, lambert_w0
from levy_ou.errors import DomainError, TruncationWarning
from levy_ou.types import Family, SeriesTruncation, TimeSeries

logger = logging.getLogger(__name__)

# columns of arrivals drawn per round; fixed so leading terms never depend on truncation
_ARRIVAL_CHUNK = 64
# rows processed together by the batch sampler
_ROW_BLOCK = 4096
_MAX_LAMBERT_ARG = np.finfo(float).max / 16


def gamma_params_from_moments(mu: float, sigma2: float) -> tuple[float, float]:
    """
    Gamma(a, b) parameters with stationary mean `mu` and variance `sigma2 / 2`.

    Returns:
        tuple[float, float]: (a, b) = (2 mu^2 / sigma2, 2 mu / sigma2).

    Raises:
        DomainError: On non-positive inputs.
    """
    if not (mu > 0 and sigma2 > 0):
        raise DomainError(f"mu and sigma2 must be positive, got ({mu}, {sigma2})")
    return 2.0 * mu**2 / sigma2, 2.0 * mu / sigma2


def ig_params_from_moments(mu: float, sigma2: float) -> tuple[float, float]:
    """
    IG(a, b) parameters with stationary mean `mu` and variance `sigma2 / 2`.

    Returns:
        tuple[float, float]: (a, b) = (mu sqrt(2 mu / sigma2), sqrt(2 mu / sigma2)).

    Raises:
        DomainError: On non-positive inputs.
    """
    if not (mu > 0 and sigma2 > 0):
        raise DomainError(f"mu and sigma2 must be positive, got ({mu}, {sigma2})")
    b = math.sqrt(2.0 * mu / sigma2)
    return mu * b, b


class LevyOUModel(BaseModel):
    """
    A subordinator-driven OU model with a closed-form stationary law.

    The gamma family has stationary law Gamma(a, b) (mean a/b, variance a/b^2); its BDLP
    is compound Poisson with rate a and exponential(b) jumps. The inverse-Gaussian family
    has stationary law IG(a, b) (mean a/b, variance a/b^3).

    Args:
        family (Family): BDLP family.
        a (float): First parameter, positive.
        b (float): Second parameter, positive.
    """

    family: Family
    a: float = Field(gt=0)
    b: float = Field(gt=0)

    @classmethod
    def from_moments(cls, family: Family, mu: float, sigma2: float) -> "LevyOUModel":
        """Model whose stationary mean is `mu` and whose L_1 variance is `sigma2`."""
        family = Family(family)
        if family is Family.GAMMA:
            a, b = gamma_params_from_moments(mu, sigma2)
        else:
            a, b = ig_params_from_moments(mu, sigma2)
        return cls(family=family, a=a, b=b)

    @property
    def mean(self) -> float:
        return self.a / self.b

    @property
    def variance(self) -> float:
        if self.family is Family.GAMMA:
            return self.a / self.b**2
        return self.a / self.b**3

    def levy_density_bdlp(self, x: ArrayLike) -> np.ndarray:
        """
        Lévy density of L_1, obtained from the stationary Lévy density nu_Y through
        nu_L(x) = -nu_Y(x) - x nu_Y'(x).
        """
        x = np.asarray(x, dtype=float)
        if self.family is Family.GAMMA:
            return self.a * self.b * np.exp(-self.b * x)
        scale = self.a / math.sqrt(2.0 * math.pi)
        return (
            scale
            * 0.5
            * (x**-1.5 + self.b**2 * x**-0.5)
            * np.exp(-0.5 * self.b**2 * x)
        )

    def tail_mass(self, x: ArrayLike) -> np.ndarray:
        """Tail mass of the BDLP Lévy measure, the integral of nu_L over (x, inf)."""
        x = np.asarray(x, dtype=float)
        if self.family is Family.GAMMA:
            return self.a * np.exp(-self.b * x)
        return (
            self.a / math.sqrt(2.0 * math.pi) * x**-0.5 * np.exp(-0.5 * self.b**2 * x)
        )

    def inverse_tail_mass(self, x: ArrayLike) -> float | np.ndarray:
        return inverse_tail_mass(self, x)


def inverse_tail_mass(model: LevyOUModel, x: ArrayLike) -> float | np.ndarray:
    """
    Generalized inverse of the BDLP tail mass function.

    Gamma family: max(0, -log(x / a) / b).
    IG family: W0(a^2 b^2 / (2 pi x^2)) / b^2, with W0 the principal Lambert W branch.

    The result is nonincreasing in x and tends to 0 as x grows.

    Args:
        model (LevyOUModel): The model.
        x (ArrayLike): Positive argument(s).

    Returns:
        float | np.ndarray: Nonnegative value(s), scalar for scalar input.

    Raises:
        DomainError: If any argument is not positive.
    """
    z = np.asarray(x, dtype=float)
    if not np.all(z > 0):
        raise DomainError("inverse tail mass is defined for x > 0 only")

    if model.family is Family.GAMMA:
        out = np.maximum(0.0, -np.log(z / model.a) / model.b)
    else:
        c = (model.a * model.b) ** 2 / (2.0 * math.pi)
        with np.errstate(over="ignore"):
            arg = np.minimum(c / z**2, _MAX_LAMBERT_ARG)
        out = np.asarray(lambert_w0(arg)) / model.b**2

    return float(out) if np.ndim(out) == 0 else out


class SeriesDraw(NamedTuple):
    value: float
    budget_exceeded: bool


def _series_block(
    model: LevyOUModel,
    horizon: float,
    rng: RandomSource,
    trunc: SeriesTruncation,
    rows: int,
    discount: float,
) -> tuple[np.ndarray, np.ndarray]:
    log_tol = math.log(trunc.tail_tol)
    totals = np.zeros(rows)
    exceeded = np.zeros(rows, dtype=bool)
    emitted = np.zeros(rows, dtype=np.int64)
    last_arrival = np.zeros(rows)
    columns = np.arange(_ARRIVAL_CHUNK)
    active = np.arange(rows)

    while active.size:
        # every round draws for all rows, so a row's terms never depend on when the
        # others stop
        gaps = rng.exponential(size=(rows, _ARRIVAL_CHUNK))
        positions = rng.uniform(size=(rows, _ARRIVAL_CHUNK))
        arrivals = last_arrival[active, None] + np.cumsum(gaps[active], axis=1)

        jumps = np.asarray(
            inverse_tail_mass(
                model, np.maximum(arrivals / horizon, np.finfo(float).tiny)
            )
        )
        # G is nonincreasing and the kernel is at most e^T, so this bounds every later term
        with np.errstate(divide="ignore"):
            below = np.log(jumps) + horizon < log_tol
        has_below = below.any(axis=1)
        first_below = np.where(has_below, below.argmax(axis=1), _ARRIVAL_CHUNK)
        budget_left = trunc.max_terms - emitted[active]
        n_keep = np.minimum(first_below, budget_left)

        keep = columns[None, :] < n_keep[:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            kernel = np.exp(horizon * (positions[active] - discount))
            terms = np.where(keep, jumps * kernel, 0.0)
        totals[active] += terms.sum(axis=1)
        emitted[active] += n_keep

        done_tol = has_below & (first_below <= budget_left)
        done_budget = ~done_tol & (emitted[active] >= trunc.max_terms)
        exceeded[active[done_budget]] = True

        last_arrival[active] = arrivals[:, -1]
        active = active[~(done_tol | done_budget)]

    return totals, exceeded


def sample_increment_integrals(
    model: LevyOUModel,
    lambda_: float,
    delta: float,
    rng: RandomSource,
    trunc: SeriesTruncation,
    size: int,
    discounted: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Independent draws of int_0^{lambda delta} e^u dL_u from the shot-noise series.

    Each block of draws gets its own generator seeded from `rng`, so `rng` advances by
    the same amount whatever the truncation, and tightening `tail_tol` or raising
    `max_terms` only appends terms to every draw.

    Args:
        model (LevyOUModel): BDLP family and parameters.
        lambda_ (float): Mean-reversion rate, positive.
        delta (float): Time step, positive.
        rng (RandomSource): Random source.
        trunc (SeriesTruncation): Stopping rule for each draw.
        size (int): Number of draws.
        discounted (bool, optional): Return exp(-lambda delta) times each draw, summed
            term by term so large horizons do not overflow. Defaults to False.

    Returns:
        tuple[np.ndarray, np.ndarray]: Draws (all >= 0) and a boolean mask of draws that
            exhausted `max_terms` before reaching `tail_tol`.

    Raises:
        DomainError: If `lambda_` or `delta` is not positive.
    """
    if not (lambda_ > 0 and delta > 0):
        raise DomainError(
            f"lambda and delta must be positive, got ({lambda_}, {delta})"
        )
    horizon = lambda_ * delta
    discount = 1.0 if discounted else 0.0

    starts = range(0, size, _ROW_BLOCK)
    block_seeds = rng.integers(2**63, size=len(starts))
    values = np.empty(size)
    exceeded = np.empty(size, dtype=bool)
    for start, seed in zip(starts, block_seeds):
        stop = min(start + _ROW_BLOCK, size)
        values[start:stop], exceeded[start:stop] = _series_block(
            model,
            horizon,
            np.random.default_rng(int(seed)),
            trunc,
            stop - start,
            discount,
        )
    return values, exceeded


def sample_increment_integral(
    model: LevyOUModel,
    lambda_: float,
    delta: float,
    rng: RandomSource,
    trunc: SeriesTruncation,
) -> SeriesDraw:
    """
    One draw of int_0^delta e^{lambda s} dL_{lambda s}.

    With u = lambda s this is int_0^T e^u dL_u for T = lambda delta, sampled from the
    shot-noise series truncated per `trunc`. A `TruncationWarning` is emitted when the
    budget runs out first; the value is still returned.

    Returns:
        SeriesDraw: The draw and whether the budget was exceeded.
    """
    values, exceeded = sample_increment_integrals(model, lambda_, delta, rng, trunc, 1)
    if exceeded[0]:
        warnings.warn(
            f"series truncated at max_terms={trunc.max_terms} before reaching"
            f" tail_tol={trunc.tail_tol}",
            TruncationWarning,
            stacklevel=2,
        )
    return SeriesDraw(float(values[0]), bool(exceeded[0]))


def cp_gamma_jumps(
    a: float, b: float, horizon: float, rng: RandomSource
) -> tuple[np.ndarray, np.ndarray]:
    """
    Jump times and sizes of the gamma-OU BDLP on [0, horizon].

    The BDLP is compound Poisson with rate `a` and exponential(`b`) jumps.

    Returns:
        tuple[np.ndarray, np.ndarray]: Uniform jump times and exponential jump sizes.
    """
    n_jumps = rng.poisson(a * horizon)
    times = rng.uniform(0.0, horizon, size=n_jumps)
    sizes = rng.exponential(1.0 / b, size=n_jumps)
    return times, sizes


def sample_cp_gamma_increment(
    a: float, b: float, lambda_: float, delta: float, rng: RandomSource
) -> float:
    """
    Exact draw of int_0^{lambda delta} e^u dL_u for the gamma-OU BDLP.

    Raises:
        DomainError: If `a` or `b` is not positive, or `lambda_`/`delta` is negative.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"a and b must be positive, got ({a}, {b})")
    if lambda_ < 0 or delta < 0:
        raise DomainError(f"lambda and delta must be >= 0, got ({lambda_}, {delta})")
    horizon = lambda_ * delta
    if horizon == 0:
        return 0.0
    times, sizes = cp_gamma_jumps(a, b, horizon, rng)
    return float(np.sum(sizes * np.exp(times)))


def sample_stationary_initial(model: LevyOUModel, rng: RandomSource) -> float:
    """
    Exact draw from the stationary law: Gamma(a, b), or IG(a, b) by the
    Michael-Schucany-Haas transformation (numpy's Wald sampler with mean a/b and
    shape a^2).
    """
    if model.family is Family.GAMMA:
        return float(rng.gamma(model.a, 1.0 / model.b))
    return float(rng.wald(model.a / model.b, model.a**2))


def simulate_path(
    model: LevyOUModel,
    lambda_: float,
    n: int,
    delta: float,
    rng: RandomSource,
    trunc: SeriesTruncation,
) -> TimeSeries:
    """
    Simulate `n` equally spaced observations of a stationary Lévy-driven OU process.

    The first value is an exact stationary draw; every later value follows the exact
    recursion with a fresh increment. Truncated increments are counted in
    `metadata["truncation_budget_exceeded"]`.

    Args:
        model (LevyOUModel): BDLP family and parameters.
        lambda_ (float): Mean-reversion rate, positive.
        n (int): Number of observations, at least 1.
        delta (float): Time step, positive.
        rng (RandomSource): Random source.
        trunc (SeriesTruncation): Series stopping rule.

    Returns:
        TimeSeries: The path.

    Raises:
        DomainError: On invalid sizes or rates.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not (lambda_ > 0 and delta > 0):
        raise DomainError(
            f"lambda and delta must be positive, got ({lambda_}, {delta})"
        )

    decay = math.exp(-lambda_ * delta)
    forcing = np.empty(n)
    forcing[0] = sample_stationary_initial(model, rng)
    n_exceeded = 0
    if n > 1:
        forcing[1:], exceeded = sample_increment_integrals(
            model, lambda_, delta, rng, trunc, n - 1, discounted=True
        )
        n_exceeded = int(exceeded.sum())

    # y[k] = decay * y[k-1] + forcing[k]
    values = signal.lfilter([1.0], [1.0, -decay], forcing)

    if n_exceeded:
        logger.warning(
            "%d of %d increments hit max_terms=%d before tail_tol=%g",
            n_exceeded,
            n - 1,
            trunc.max_terms,
            trunc.tail_tol,
        )

    return TimeSeries(
        values=values,
        delta=delta,
        metadata={
            "family": model.family.value,
            "a": model.a,
            "b": model.b,
            "lambda": lambda_,
            "truncation_budget_exceeded": n_exceeded,
        },
    )
