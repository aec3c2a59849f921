"""Distributions, quantiles and seeded random streams.

This module is the numerical foundation for everything else: Gaussian
rating densities, the Nakagami density that the closed-form error model
produces, Student-t and chi-square quantiles for confidence intervals,
and a counter-based random stream scheme that keeps every simulation
reproducible for any worker count.

Scalar wrappers around scipy.special do the quantile work; the Nakagami
functions are evaluated in log space so large sample counts do not
overflow the gamma function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy import special as _sc

__all__ = [
    "GaussianParams",
    "NakagamiParams",
    "RandomSeed",
    "gaussian_pdf",
    "gaussian_cdf",
    "gaussian_quantile",
    "nakagami_pdf",
    "nakagami_cdf",
    "nakagami_mean_var",
    "quantile_t",
    "quantile_chi2",
    "cdf_t",
    "cdf_chi2",
    "sample_gaussian",
    "stream_generator",
]

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianParams:
    """Mean and standard deviation of one rating distribution.

    sigma may be zero: the distribution degenerates to a point mass at mu,
    which several operations special-case rather than reject.
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")
        if not (self.sigma >= 0.0) or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")


@dataclass(frozen=True)
class NakagamiParams:
    """Shape and spread of a Nakagami density.

    The error model produces shape = n/2 for n rating pairs and spread 1;
    shape below 0.5 makes the density non-normalizable at the origin.
    """

    shape: float
    spread: float = 1.0

    def __post_init__(self):
        if not (self.shape >= 0.5):
            raise ValueError(f"shape must be >= 0.5, got {self.shape}")
        if not (self.spread > 0.0):
            raise ValueError(f"spread must be > 0, got {self.spread}")


@dataclass(frozen=True)
class RandomSeed:
    """Root entropy plus a stream id.

    Identical (root, stream) values reproduce identical draws everywhere in
    the package, independent of thread or process count. Distinct stream ids
    give streams that behave as independent.
    """

    root: int
    stream: int = 0

    def __post_init__(self):
        for name, value in (("root", self.root), ("stream", self.stream)):
            if not isinstance(value, int) or not (0 <= value < 2**64):
                raise ValueError(f"{name} must be an integer in [0, 2^64), got {value!r}")

    def child(self, stream: int) -> "RandomSeed":
        """Same root, different stream id."""
        return RandomSeed(self.root, stream)


def stream_generator(seed: RandomSeed, *path: int) -> Generator:
    """Philox generator for one derived stream.

    The path extends (root, stream) with purpose/partition words, so a
    simulation can hand out per-pair or per-block streams that never
    collide. Philox is counter-based: construction is O(1) and streams
    with different entropy tuples are statistically independent.
    """
    words = [seed.root, seed.stream]
    words.extend(int(p) for p in path)
    return Generator(Philox(SeedSequence(words)))


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _scalar_or_array(arr, scalar: bool):
    return float(arr) if scalar else arr


def gaussian_pdf(params: GaussianParams, x):
    """Density of N(mu, sigma^2) at x.

    Requires sigma > 0; a point mass has no density to evaluate.
    """
    if params.sigma == 0.0:
        raise ValueError("gaussian_pdf is undefined for sigma = 0")
    arr, scalar = _as_array(x)
    z = (arr - params.mu) / params.sigma
    out = np.exp(-0.5 * z * z - _LOG_SQRT_2PI) / params.sigma
    return _scalar_or_array(out, scalar)


def gaussian_cdf(params: GaussianParams, x):
    """P(X <= x) for X ~ N(mu, sigma^2); a step function when sigma = 0."""
    arr, scalar = _as_array(x)
    if params.sigma == 0.0:
        out = np.where(arr >= params.mu, 1.0, 0.0)
    else:
        out = _sc.ndtr((arr - params.mu) / params.sigma)
    return _scalar_or_array(out, scalar)


def gaussian_quantile(params: GaussianParams, p):
    """Inverse CDF of N(mu, sigma^2) for p in (0, 1)."""
    arr, scalar = _as_array(p)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    out = params.mu + params.sigma * _sc.ndtri(arr)
    return _scalar_or_array(out, scalar)


def nakagami_pdf(params: NakagamiParams, x):
    """Nakagami density 2 m^m / (Gamma(m) w^m) x^(2m-1) exp(-m x^2 / w).

    Evaluated in log space; zero for x < 0. At x = 0 the density is 0 for
    shape > 0.5 and the half-normal value sqrt(2/pi)/sqrt(w) at shape 0.5.
    """
    m, w = params.shape, params.spread
    arr, scalar = _as_array(x)
    out = np.zeros_like(arr)
    pos = arr > 0.0
    xp = arr[pos]
    logpdf = (
        math.log(2.0)
        + m * math.log(m / w)
        - _sc.gammaln(m)
        + (2.0 * m - 1.0) * np.log(xp)
        - m * xp * xp / w
    )
    out[pos] = np.exp(logpdf)
    if m == 0.5:
        out[arr == 0.0] = math.sqrt(2.0 / math.pi) / math.sqrt(w)
    return _scalar_or_array(out, scalar)


def nakagami_cdf(params: NakagamiParams, x):
    """P(X <= x): the regularized lower incomplete gamma at (m, m x^2 / w)."""
    m, w = params.shape, params.spread
    arr, scalar = _as_array(x)
    out = np.zeros_like(arr)
    pos = arr > 0.0
    out[pos] = _sc.gammainc(m, m * arr[pos] ** 2 / w)
    return _scalar_or_array(out, scalar)


def nakagami_mean_var(n) -> tuple:
    """Mean and variance of the error magnitude for n unit-noise pairs.

    mean = Gamma((n+1)/2) / Gamma(n/2) * sqrt(2/n) and, because the second
    moment is exactly 1, var = 1 - mean^2. The log-gamma difference keeps
    the ratio stable for n far beyond 10^6. Accepts scalars or arrays;
    n must be >= 1.
    """
    arr, scalar = _as_array(n)
    if np.any(arr < 1.0):
        raise ValueError("n must be >= 1")
    log_ratio = _sc.gammaln((arr + 1.0) / 2.0) - _sc.gammaln(arr / 2.0)
    mean = np.exp(log_ratio + 0.5 * (math.log(2.0) - np.log(arr)))
    var = 1.0 - mean * mean
    if scalar:
        return float(mean), float(var)
    return mean, var


def _check_quantile_args(p, k):
    parr, pscalar = _as_array(p)
    if np.any((parr <= 0.0) | (parr >= 1.0)):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    karr = np.asarray(k)
    if np.any(karr < 1):
        raise ValueError("degrees of freedom must be >= 1")
    return parr, pscalar


def quantile_t(p, k):
    """Student-t quantile with k degrees of freedom, relative error < 1e-9."""
    parr, scalar = _check_quantile_args(p, k)
    out = _sc.stdtrit(k, parr)
    return _scalar_or_array(out, scalar)


def quantile_chi2(p, k):
    """Chi-square quantile with k degrees of freedom, relative error < 1e-9."""
    parr, scalar = _check_quantile_args(p, k)
    out = _sc.chdtri(k, 1.0 - parr)
    return _scalar_or_array(out, scalar)


def cdf_t(x, k):
    """Student-t CDF with k degrees of freedom."""
    arr, scalar = _as_array(x)
    return _scalar_or_array(_sc.stdtr(k, arr), scalar)


def cdf_chi2(x, k):
    """Chi-square CDF with k degrees of freedom."""
    arr, scalar = _as_array(x)
    return _scalar_or_array(_sc.chdtr(k, arr), scalar)


def sample_gaussian(params: GaussianParams, count: int, seed: RandomSeed) -> np.ndarray:
    """count i.i.d. draws from N(mu, sigma^2) on the seed's stream.

    sigma = 0 returns a constant array. The same (params, count, seed)
    always returns the same values.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if params.sigma == 0.0:
        return np.full(count, params.mu)
    gen = stream_generator(seed)
    return params.mu + params.sigma * gen.standard_normal(count)
