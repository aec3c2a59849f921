"""Significance-restricted deviations and the sRMSE metric.

A deviation only counts as evidence against a predictor when the
realized rating falls outside the interval around the prediction that
holds mass 1 - alpha of the rating density. This module builds those
intervals, samples ratings conditioned on landing outside them, and
turns both into the significant-deviation metric in two flavors:

``conditional``
    every rating is drawn from its density restricted to the rejection
    region, all n terms enter, divisor n (the construction behind the
    noise-resolution simulations);
``filtered``
    ratings are drawn unconditionally, only significant deviations
    enter, and each trial divides by its own significant-term count
    (zero significant terms produce a 0 value).

Intervals are widened stepwise, 1e-3 standard deviations per step, until
the enclosed mass first reaches 1 - alpha; on a unit-sigma density this
is a plain 1e-3 step and it keeps the mass overshoot below one step's
density for any sigma.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special as _sc

from . import _kernels
from .engine import (
    BLOCK_SIZE,
    PURPOSE_METRIC,
    PURPOSE_TAIL,
    MetricKind,
    MetricSample,
    PredictorSet,
    RatingDistributionSet,
    _blocked_transform,
    check_alignment,
)
from .errors import DegenerateDistributionError
from .statmath import GaussianParams, RandomSeed, stream_generator

__all__ = ["SignificanceInterval", "critical_interval", "sample_conditional",
           "sample_srmse"]

STEP = 1e-3  # interval growth per step, in standard deviations
_CHUNK_STEPS = 4096


@dataclass(frozen=True)
class SignificanceInterval:
    """Symmetric interval around a prediction holding >= 1 - alpha of the
    rating mass; deviations beyond it are statistically significant."""

    center: float
    half_width: float
    alpha: float
    enclosed_mass: float

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width


def _interval_mass(a_std, u):
    """Mass of N(u, 1) inside [-a_std, a_std], vectorized over a_std."""
    return _sc.ndtr(a_std - u) + _sc.ndtr(a_std + u) - 1.0


def _halfwidth_steps(u: np.ndarray, alpha: float) -> np.ndarray:
    """First step count k where mass(k * STEP) >= 1 - alpha, per element.

    All elements march through shared step chunks; the enclosed mass is
    monotone in the half-width so searchsorted finds the crossing.
    """
    target = 1.0 - alpha
    out = np.zeros(u.shape, dtype=np.int64)
    pending = np.arange(u.size)
    base = 0
    while pending.size:
        grid = (base + 1 + np.arange(_CHUNK_STEPS)) * STEP
        mass = _interval_mass(grid[None, :], u[pending, None])
        # mass rows are monotone nondecreasing; find first True per row
        hit = mass >= target
        first = np.argmax(hit, axis=1)
        found = hit[np.arange(len(pending)), first]
        out[pending[found]] = base + 1 + first[found]
        pending = pending[~found]
        base += _CHUNK_STEPS
        if base * STEP > np.max(np.abs(u)) + 40.0:
            raise RuntimeError("interval search failed to terminate")
    return out


def critical_interval(rating: GaussianParams, predicted: float,
                      alpha: float) -> SignificanceInterval:
    """Interval [predicted - a, predicted + a] holding mass >= 1 - alpha.

    a is the smallest step multiple that reaches the target, so the
    recovered mass overshoots 1 - alpha by less than one step's density.
    sigma = 0 yields a width-0 interval: any deviation is significant.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if rating.sigma == 0.0:
        mass = 1.0 if rating.mu == predicted else 0.0
        return SignificanceInterval(predicted, 0.0, alpha, mass)
    u = (rating.mu - predicted) / rating.sigma
    steps = _halfwidth_steps(np.array([u]), alpha)[0]
    a = steps * STEP * rating.sigma
    mass = float(_interval_mass(steps * STEP, u))
    return SignificanceInterval(predicted, float(a), alpha, mass)


def rejection_mass(rating: GaussianParams, interval: SignificanceInterval) -> float:
    """Rating probability mass outside the interval."""
    if rating.sigma == 0.0:
        inside = interval.lo <= rating.mu <= interval.hi
        return 0.0 if inside else 1.0
    u = (rating.mu - interval.center) / rating.sigma
    return float(1.0 - _interval_mass(interval.half_width / rating.sigma, u))


def sample_conditional(rating: GaussianParams, interval: SignificanceInterval,
                       count: int, seed: RandomSeed) -> np.ndarray:
    """Draws from the rating density restricted to the rejection region.

    Rejection sampling: Gaussian draws are kept only when they land
    outside the interval, so the accepted values follow the restricted
    density exactly. Aborts when the rejection region holds less than
    1e-9 mass (the expected acceptance rate makes the loop hopeless).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    rate = rejection_mass(rating, interval)
    if rate < 1e-9:
        raise DegenerateDistributionError(
            f"rejection region mass {rate:.3e} below 1e-9; expected acceptance "
            f"rate too small to sample")
    if rating.sigma == 0.0:
        return np.full(count, rating.mu)
    gen = stream_generator(seed, PURPOSE_TAIL, 0, 0)
    out = np.empty(count)
    got = 0
    while got < count:
        need = count - got
        chunk = max(1024, int(1.3 * need / rate) + 16)
        r = rating.mu + rating.sigma * gen.standard_normal(chunk)
        keep = r[np.abs(r - interval.center) > interval.half_width]
        take = min(len(keep), need)
        out[got:got + take] = keep[:take]
        got += take
    return out


def _intervals_for(ratings: RatingDistributionSet, predictors: PredictorSet,
                   alpha: float) -> np.ndarray:
    """Per-pair half-widths; 0 where sigma = 0."""
    halfwidth = np.zeros(len(ratings))
    noisy = ratings.sigma > 0.0
    if np.any(noisy):
        u = (ratings.mu[noisy] - predictors.values[noisy]) / ratings.sigma[noisy]
        steps = _halfwidth_steps(u, alpha)
        halfwidth[noisy] = steps * STEP * ratings.sigma[noisy]
    return halfwidth


def _conditional_pair_terms(mu, sigma, pi, halfwidth, trials, seed, stream_tag,
                            pair_index):
    """tau squared significant deviations for one pair, by rejection."""
    gen = stream_generator(seed, PURPOSE_TAIL, stream_tag, pair_index)
    center, a = pi, halfwidth
    # rejection mass is ~alpha by construction of the interval
    u = (mu - center) / sigma
    rate = 1.0 - float(_interval_mass(a / sigma, u))
    if rate < 1e-9:
        raise DegenerateDistributionError(
            f"pair index {pair_index}: rejection mass {rate:.3e} below 1e-9")
    out = np.empty(trials)
    got = 0
    while got < trials:
        need = trials - got
        chunk = max(4096, int(1.3 * need / rate) + 16)
        r = mu + sigma * gen.standard_normal(chunk)
        d = center - r
        keep = d[np.abs(d) > a]
        take = min(len(keep), need)
        out[got:got + take] = keep[:take]
        got += take
    return out * out


def sample_srmse(ratings: RatingDistributionSet, predictors: PredictorSet,
                 alpha: float = 0.05, trials: int = 10**5,
                 seed: RandomSeed = RandomSeed(0), mode: str = "conditional",
                 *, stream_tag: int = 0, threads: int = 1,
                 group: int = 8) -> MetricSample:
    """tau draws of the significant-deviation RMSE.

    Conditional mode draws every rating from its tail-restricted density
    (sigma = 0 pairs contribute their constant deviation) and divides by
    n. Filtered mode draws unconditionally and keeps per-trial counts;
    with the same seed it consumes the identical rating draws as
    sample_metric, so the two metrics see the same scenarios.

    Pair accumulation order is fixed, so results do not depend on the
    thread count.
    """
    check_alignment(ratings, predictors)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode not in ("conditional", "filtered"):
        raise ValueError(f"unknown mode {mode!r}")

    halfwidth = _intervals_for(ratings, predictors, alpha)
    mu, sigma, pi = ratings.mu, ratings.sigma, predictors.values
    n = len(ratings)

    if mode == "filtered":
        def reducer(z, out_block):
            _kernels.filtered_reduce(z, mu, sigma, pi, halfwidth, out_block)

        values = _blocked_transform(mu, sigma, pi, reducer, trials, seed,
                                    PURPOSE_METRIC, stream_tag, threads,
                                    BLOCK_SIZE)
        return MetricSample(MetricKind.SRMSE, values, n, seed, predictors.label)

    acc = np.zeros(trials)
    noisy = [i for i in range(n) if sigma[i] > 0.0]
    constant_ssq = float(np.sum((pi[~(sigma > 0.0)] - mu[~(sigma > 0.0)]) ** 2))
    acc += constant_ssq

    def pair_terms(i):
        return _conditional_pair_terms(mu[i], sigma[i], pi[i], halfwidth[i],
                                       trials, seed, stream_tag, i)

    # compute per-pair term vectors (parallelizable), reduce in pair order
    for start in range(0, len(noisy), group):
        batch = noisy[start:start + group]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(pair_terms, batch))
        else:
            results = [pair_terms(i) for i in batch]
        for terms in results:
            acc += terms
    values = np.sqrt(acc / n)
    return MetricSample(MetricKind.SRMSE, values, n, seed, predictors.label)
