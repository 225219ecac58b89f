"""
Scalar special functions and the random-number contract shared by all samplers.

Randomness is always injected: every sampler takes a `numpy.random.Generator` and never
touches global state. Independent streams come from `make_rng(seed, stream)`.
"""

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from levy_ou.errors import DomainError

RandomSource = np.random.Generator

_LAMBERT_RTOL = 1e-12
_LAMBERT_MAX_ITER = 100
_ARRIVAL_CHUNK = 64


def make_rng(seed: int, stream: int | None = None) -> RandomSource:
    """
    Create a random source from a 64-bit seed, optionally selecting a child stream.

    Streams built from the same seed and different `stream` indices share no state; the
    stream with index `k` is the `k`-th child of `SeedSequence(seed)`.

    Args:
        seed (int): Root seed in [0, 2**64).
        stream (int | None, optional): Child stream index. Defaults to None (root).

    Returns:
        RandomSource: A PCG64-backed generator.

    Raises:
        DomainError: If the seed or the stream index is out of range.
    """
    if not 0 <= seed < 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if stream is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    if stream < 0:
        raise DomainError(f"stream index must be >= 0, got {stream}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def lambert_w0(x: ArrayLike) -> float | np.ndarray:
    """
    Principal branch of the Lambert W function on the nonnegative axis.

    Solves w * exp(w) = x with Halley's method started from a log(1 + x) based guess.
    Works elementwise on arrays; only elements that have not met the residual tolerance
    are iterated further.

    Args:
        x (ArrayLike): Nonnegative finite argument(s).

    Returns:
        float | np.ndarray: W(x) >= 0, with |w e^w - x| <= 1e-12 * max(1, x).

    Raises:
        DomainError: If any argument is negative or not finite.

    Example:
        ```python
        lambert_w0(np.e)  # 1.0
        lambert_w0([0.0, 1.0])  # array([0.        , 0.56714329])
        ```
    """
    z = np.asarray(x, dtype=float)
    scalar_input = z.ndim == 0
    z = np.atleast_1d(z)

    if not np.all(np.isfinite(z)):
        raise DomainError("lambert_w0 argument must be finite")
    if np.any(z < 0):
        raise DomainError("lambert_w0 is only defined here for x >= 0")

    log1p_z = np.log1p(z)
    w = log1p_z * (1.0 - np.log1p(log1p_z) / (2.0 + log1p_z))

    tol = _LAMBERT_RTOL * np.maximum(1.0, z)
    active = np.abs(w * np.exp(w) - z) > tol
    for _ in range(_LAMBERT_MAX_ITER):
        if not active.any():
            break
        wa, za = w[active], z[active]
        ew = np.exp(wa)
        f = wa * ew - za
        wp1 = wa + 1.0
        step = f / (ew * wp1 - (wa + 2.0) * f / (2.0 * wp1))
        wa = wa - step
        w[active] = wa

        residual = np.abs(wa * np.exp(wa) - za)
        stalled = np.abs(step) <= 4 * np.finfo(float).eps * (1.0 + np.abs(wa))
        still = (residual > tol[active]) & ~stalled
        active[active] = still

    w = np.maximum(w, 0.0)
    return float(w[0]) if scalar_input else w


def poisson_arrivals(rng: RandomSource, horizon: float) -> np.ndarray:
    """
    Arrival times of a unit-rate Poisson process on (0, horizon].

    The arrivals are the partial sums of unit exponentials, generated in fixed-size chunks
    until the first sum exceeds `horizon`; that overshoot is not returned.

    Args:
        rng (RandomSource): Random source.
        horizon (float): Positive horizon.

    Returns:
        np.ndarray: Strictly increasing arrival times, possibly empty.

    Raises:
        DomainError: If `horizon` is not positive.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")

    chunks = []
    last = 0.0
    while True:
        arrivals = last + np.cumsum(rng.exponential(size=_ARRIVAL_CHUNK))
        inside = arrivals[arrivals <= horizon]
        chunks.append(inside)
        if inside.size < _ARRIVAL_CHUNK:
            break
        last = arrivals[-1]

    return np.concatenate(chunks)


def sample_gamma(rng: RandomSource, shape: float, rate: float) -> float:
    """
    Draw from Gamma(shape, rate), density proportional to x^(shape-1) e^(-rate x).

    Delegates to numpy's Marsaglia-Tsang sampler, which covers shape < 1 by boosting.

    Raises:
        DomainError: On non-positive parameters.
    """
    if not (shape > 0 and rate > 0):
        raise DomainError(f"gamma parameters must be positive, got ({shape}, {rate})")
    return float(rng.gamma(shape, 1.0 / rate))


def chi_square_sf(x: float, dof: int) -> float:
    """
    Upper-tail probability P(chi2_dof > x).

    Raises:
        DomainError: If `x` is negative or `dof` is not a positive integer.
    """
    if not x >= 0:
        raise DomainError(f"chi-square argument must be >= 0, got {x}")
    if int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof}")
    return float(stats.chi2.sf(x, int(dof)))


def normal_quantile(p: float) -> float:
    """Standard normal quantile at probability `p` in (0, 1)."""
    if not 0 < p < 1:
        raise DomainError(f"probability must be in (0, 1), got {p}")
    return float(stats.norm.ppf(p))
