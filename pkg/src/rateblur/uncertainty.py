"""Parameter uncertainty propagated into metric distributions.

Slice means and sds are only estimates; this module turns their
confidence intervals into borderline rating scenarios and measures how
far apart the resulting metric distributions sit.

The min scenario takes every pair's lower mu and lower sigma endpoint,
the max scenario the upper ones. Between them lies everything the data
cannot rule out at the chosen level, so the gap between min-case and
max-case metric densities bounds the evaluation's resolving power. An
artificial observation count can replace the real one to watch that gap
close as (hypothetical) re-rating effort grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import ParameterEstimate, RatingTensor, estimate_parameters
from .engine import (
    EmpiricalDensity,
    MetricKind,
    MetricSample,
    PredictorSet,
    RatingDistributionSet,
    density_intersection,
    density_pair,
    estimate_density,
    exceedance_probability,
    overlap_area,
    sample_metric,
)
from .statmath import RandomSeed, quantile_chi2, quantile_t

__all__ = [
    "ConfidenceIntervalPair", "BorderlineScenario", "confidence_intervals",
    "build_borderline", "tensor_recommenders", "simulate_borderline_rmse",
    "convergence_intersection", "convergence_to_stationary",
    "convergence_error_probability", "ci_width_exponents", "BorderlineStudy",
]


@dataclass(frozen=True)
class ConfidenceIntervalPair:
    """Exact small-sample intervals for a Gaussian slice's mu and sigma."""

    mu: tuple
    sigma: tuple
    alpha: float
    n: int


def confidence_intervals(est: ParameterEstimate, alpha: float = 0.05,
                         n_override: int | None = None) -> ConfidenceIntervalPair:
    """t interval for the mean, chi-square interval for the sd.

    mean +- t(1 - alpha/2; n-1) s / sqrt(n);
    sd sqrt((n-1) / chi2(1 - alpha/2; n-1)) .. sd sqrt((n-1) / chi2(alpha/2; n-1)).
    n_override substitutes an artificial observation count (the s stays).
    A zero sd collapses both intervals to points.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    n = est.n_obs if n_override is None else n_override
    if n < 2:
        raise ValueError(f"need n >= 2 observations, got {n}")
    if est.sd is None:
        raise ValueError("estimate has no sd (single trial); cannot build "
                         "intervals")
    s = est.sd
    half = quantile_t(1.0 - alpha / 2.0, n - 1) * s / np.sqrt(n)
    sig_lo = s * np.sqrt((n - 1) / quantile_chi2(1.0 - alpha / 2.0, n - 1))
    sig_hi = s * np.sqrt((n - 1) / quantile_chi2(alpha / 2.0, n - 1))
    return ConfidenceIntervalPair((est.mean - half, est.mean + half),
                                  (float(sig_lo), float(sig_hi)), alpha, n)


@dataclass(frozen=True)
class BorderlineScenario:
    """One endpoint scenario: every pair at its interval edge."""

    case: str
    ratings: RatingDistributionSet
    alpha: float
    n_effective: int


def build_borderline(estimates: dict, alpha: float = 0.05, case: str = "min",
                     n_override: int | None = None) -> BorderlineScenario:
    """Rating set with every pair at (mu_lo, sigma_lo) or (mu_hi, sigma_hi).

    estimates maps pair -> ParameterEstimate. All pairs must share one
    observation count so a single pair of quantiles applies.
    """
    if case not in ("min", "max"):
        raise ValueError(f"case must be 'min' or 'max', got {case!r}")
    if not estimates:
        raise ValueError("no estimates")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    pairs = sorted(estimates)
    n_set = {estimates[p].n_obs for p in pairs}
    if len(n_set) != 1:
        raise ValueError(f"mixed observation counts {sorted(n_set)}")
    n = n_set.pop() if n_override is None else n_override
    if n < 2:
        raise ValueError(f"need n >= 2 observations, got {n}")
    means = np.array([estimates[p].mean for p in pairs])
    sds_list = [estimates[p].sd for p in pairs]
    if any(s is None for s in sds_list):
        raise ValueError("estimates lack sds (single trial)")
    sds = np.array(sds_list)
    t_q = quantile_t(1.0 - alpha / 2.0, n - 1)
    half = t_q * sds / np.sqrt(n)
    if case == "min":
        mu = means - half
        sigma = sds * np.sqrt((n - 1) / quantile_chi2(1.0 - alpha / 2.0, n - 1))
    else:
        mu = means + half
        sigma = sds * np.sqrt((n - 1) / quantile_chi2(alpha / 2.0, n - 1))
    ratings = RatingDistributionSet(pairs, mu, sigma)
    return BorderlineScenario(case, ratings, alpha, n)


def tensor_recommenders(tensor: RatingTensor) -> list:
    """The tensor's natural predictor family.

    First the per-pair trial mean (the best guess the data offers), then
    one predictor per trial column: predict each pair by the rating it
    got on that single trial. For T trials this yields T + 1 predictors
    labeled mean, trial-1, ..., trial-T.
    """
    pairs = tensor.pairs
    means = tensor.data.mean(axis=2).reshape(-1)
    out = [PredictorSet(pairs, means, label="mean")]
    for t in range(1, tensor.trials + 1):
        out.append(PredictorSet(pairs, tensor.trial_slice(t),
                                label=f"trial-{t}"))
    return out


@dataclass(frozen=True)
class BorderlineStudy:
    """Metric densities for every recommender under both edge scenarios."""

    alpha: float
    trials: int
    labels: tuple
    densities: dict     # (case, label) -> EmpiricalDensity
    means: dict         # (case, label) -> float
    l1_distances: dict  # (case, label_a, label_b) -> float


def simulate_borderline_rmse(tensor: RatingTensor, alpha: float = 0.05,
                             trials: int = 10**5, bins: int = 55,
                             seed: RandomSeed = RandomSeed(0), *,
                             kind: MetricKind = MetricKind.RMSE,
                             threads: int = 1) -> BorderlineStudy:
    """Metric distributions of the tensor's predictor family at both
    confidence-interval edges.

    Every (case, recommender) cell gets its own stream tag, so all cells
    are mutually independent while one seed reproduces the whole study.
    """
    estimates = estimate_parameters(tensor)
    predictors = tensor_recommenders(tensor)
    labels = tuple(p.label for p in predictors)
    densities, means, l1 = {}, {}, {}
    samples = {}
    for case_idx, case in enumerate(("min", "max")):
        scenario = build_borderline(estimates, alpha, case)
        for rec_idx, pred in enumerate(predictors):
            tag = case_idx * 16 + rec_idx
            sample = sample_metric(scenario.ratings, pred, kind, trials, seed,
                                   stream_tag=tag, threads=threads)
            samples[(case, pred.label)] = sample
            densities[(case, pred.label)] = estimate_density(sample.values,
                                                             bins)
            means[(case, pred.label)] = float(np.mean(sample.values))
        for a_idx in range(len(predictors)):
            for b_idx in range(a_idx + 1, len(predictors)):
                la, lb = labels[a_idx], labels[b_idx]
                l1[(case, la, lb)] = overlap_area(*density_pair(
                    samples[(case, la)].values, samples[(case, lb)].values,
                    bins))
    return BorderlineStudy(alpha, trials, labels, densities, means, l1)


def convergence_intersection(tensor: RatingTensor, n_grid,
                             alpha: float = 0.05, trials: int = 10**5,
                             bins: int = 55,
                             seed: RandomSeed = RandomSeed(0), *,
                             threads: int = 1) -> list:
    """Overlap of the min-case and max-case mean-predictor RMSE densities
    as the (artificial) observation count grows.

    Returns [(n, intersection)] with intersection = integral of the
    pointwise minimum, 1 meaning the edge scenarios are no longer
    distinguishable.
    """
    estimates = estimate_parameters(tensor)
    pred = tensor_recommenders(tensor)[0]
    curve = []
    for gi, n in enumerate(n_grid):
        vals = {}
        for case_idx, case in enumerate(("min", "max")):
            scenario = build_borderline(estimates, alpha, case, n_override=n)
            sample = sample_metric(scenario.ratings, pred, MetricKind.RMSE,
                                   trials, seed, stream_tag=gi * 4 + case_idx,
                                   threads=threads)
            vals[case] = sample.values
        curve.append((int(n), density_intersection(
            *density_pair(vals["min"], vals["max"], bins))))
    return curve


def convergence_to_stationary(tensor: RatingTensor, n_grid,
                              alpha: float = 0.05, trials: int = 10**5,
                              bins: int = 55,
                              seed: RandomSeed = RandomSeed(0), *,
                              threads: int = 1) -> list:
    """Overlap of each edge scenario's RMSE density with the stationary
    (point-estimate) density as the observation count grows.

    This is the convergence measure proper: both borderline densities
    collapse onto the n -> infinity limit, and the study is converged
    once the smaller of the two intersections clears the chosen bar.
    Returns [(n, min_vs_stationary, max_vs_stationary)].
    """
    estimates = estimate_parameters(tensor)
    pred = tensor_recommenders(tensor)[0]
    pairs = sorted(estimates)
    mu = np.array([estimates[p].mean for p in pairs])
    sd = np.array([estimates[p].sd for p in pairs])
    stationary = RatingDistributionSet(pairs, mu, sd)
    s_stat = sample_metric(stationary, pred, MetricKind.RMSE, trials, seed,
                           stream_tag=2, threads=threads)
    curve = []
    for gi, n in enumerate(n_grid):
        row = [int(n)]
        for case_idx, case in enumerate(("min", "max")):
            scenario = build_borderline(estimates, alpha, case, n_override=n)
            sample = sample_metric(scenario.ratings, pred, MetricKind.RMSE,
                                   trials, seed, stream_tag=4 + gi * 4 + case_idx,
                                   threads=threads)
            row.append(density_intersection(
                *density_pair(sample.values, s_stat.values, bins)))
        curve.append(tuple(row))
    return curve


def convergence_error_probability(tensor: RatingTensor, n_grid,
                                  alpha: float = 0.05, trials: int = 10**5,
                                  seed: RandomSeed = RandomSeed(0), *,
                                  pair: tuple = (1, 3),
                                  threads: int = 1) -> dict:
    """P(metric of recommender k1 exceeds metric of recommender k2) per
    edge case, as the artificial observation count grows.

    pair indexes the tensor's predictor family 1-based (1 is the mean
    predictor, k >= 2 is trial k-1). Draws for the two recommenders are
    independent. Returns {case: [(n, p)]}.
    """
    estimates = estimate_parameters(tensor)
    family = tensor_recommenders(tensor)
    k1, k2 = pair
    if not (1 <= k1 <= len(family) and 1 <= k2 <= len(family)):
        raise ValueError(f"pair {pair} outside family 1..{len(family)}")
    pred_a, pred_b = family[k1 - 1], family[k2 - 1]
    out = {"min": [], "max": []}
    for gi, n in enumerate(n_grid):
        for case_idx, case in enumerate(("min", "max")):
            scenario = build_borderline(estimates, alpha, case, n_override=n)
            base_tag = gi * 8 + case_idx * 4
            sa = sample_metric(scenario.ratings, pred_a, MetricKind.RMSE,
                               trials, seed, stream_tag=base_tag,
                               threads=threads)
            sb = sample_metric(scenario.ratings, pred_b, MetricKind.RMSE,
                               trials, seed, stream_tag=base_tag + 1,
                               threads=threads)
            out[case].append((int(n), exceedance_probability(sa, sb)))
    return out


def ci_width_exponents(alpha: float = 0.05, n_grid=None) -> dict:
    """Empirical log-log slopes of the interval widths in n.

    Fits width(n) ~ n^slope for the mean's t interval and the sd's
    chi-square interval over n_grid (default 4..4096 doublings). Both
    slopes sit near -1/2 once n clears the small-sample regime.
    """
    if n_grid is None:
        n_grid = [4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096]
    n = np.asarray(list(n_grid), dtype=float)
    if len(n) < 2 or np.any(n < 2):
        raise ValueError("n_grid needs >= 2 entries, all >= 2")
    t_q = np.array([quantile_t(1.0 - alpha / 2.0, int(k) - 1) for k in n])
    mu_width = 2.0 * t_q / np.sqrt(n)
    chi_lo = np.array([quantile_chi2(1.0 - alpha / 2.0, int(k) - 1) for k in n])
    chi_hi = np.array([quantile_chi2(alpha / 2.0, int(k) - 1) for k in n])
    sigma_width = np.sqrt((n - 1) / chi_hi) - np.sqrt((n - 1) / chi_lo)
    slope_mu = float(np.polyfit(np.log(n), np.log(mu_width), 1)[0])
    slope_sigma = float(np.polyfit(np.log(n), np.log(sigma_width), 1)[0])
    return {"mu": slope_mu, "sigma": slope_sigma}
