"""Closed-form metric distribution for the idealized rating scenario.

When every rating deviation is standard normal (unit noise, predictions
centered on the rating means), the squared-error sum is chi-square with
n degrees of freedom and the root mean squared error follows a Nakagami
distribution with shape n/2 and spread 1. Its mean shrinks toward 1 like
Gamma((n+1)/2)/Gamma(n/2) * sqrt(2/n) and, since the second moment is
exactly one, its variance is 1 - mean^2.

This module exposes that model and a divergence check against the Monte
Carlo pathway, which is the package's primary self-test: two independent
routes to the same distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import MetricKind, PredictorSet, RatingDistributionSet, sample_metric
from .statmath import NakagamiParams, RandomSeed, nakagami_cdf, nakagami_mean_var, nakagami_pdf

__all__ = ["AnalyticRmseModel", "DivergenceReport", "derive_analytic_model",
           "analytic_vs_mc_check"]


@dataclass(frozen=True)
class AnalyticRmseModel:
    """Nakagami(n/2, 1) model of the RMSE under n unit-noise pairs."""

    n: int
    params: NakagamiParams
    mean: float
    var: float

    def pdf(self, x):
        return nakagami_pdf(self.params, x)

    def cdf(self, x):
        return nakagami_cdf(self.params, x)


@dataclass(frozen=True)
class DivergenceReport:
    """Agreement measures between the analytic model and a Monte Carlo
    sample of the same scenario."""

    n: int
    trials: int
    ks_distance: float
    mc_mean: float
    mc_var: float
    analytic_mean: float
    analytic_var: float

    @property
    def mean_error(self) -> float:
        return abs(self.mc_mean - self.analytic_mean)

    @property
    def var_error(self) -> float:
        return abs(self.mc_var - self.analytic_var)


def derive_analytic_model(n: int) -> AnalyticRmseModel:
    """Model for n rating pairs; n >= 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    mean, var = nakagami_mean_var(n)
    return AnalyticRmseModel(int(n), NakagamiParams(n / 2.0, 1.0), mean, var)


def ks_statistic(values: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between a sample and a CDF callable."""
    x = np.sort(np.asarray(values, dtype=float))
    tau = len(x)
    f = np.asarray(cdf(x), dtype=float)
    grid = np.arange(tau, dtype=float)
    return float(np.max(np.maximum(f - grid / tau, (grid + 1.0) / tau - f)))


def analytic_vs_mc_check(n: int, trials: int = 10**6,
                         seed: RandomSeed = RandomSeed(0)) -> DivergenceReport:
    """Sample the idealized scenario through the Monte Carlo engine and
    measure its divergence from the closed form.

    The scenario: n pairs, ratings N(mu, 1) with predictions equal to mu.
    Needs trials >= 10^4 for the KS distance to mean anything.
    """
    if trials < 10**4:
        raise ValueError("trials must be >= 10^4")
    model = derive_analytic_model(n)
    pairs = [(0, i) for i in range(n)]
    mu = np.zeros(n)
    ratings = RatingDistributionSet(pairs, mu, np.ones(n))
    predictors = PredictorSet(pairs, mu, "perfect")
    sample = sample_metric(ratings, predictors, MetricKind.RMSE, trials, seed)
    values = sample.values
    return DivergenceReport(
        n=model.n,
        trials=trials,
        ks_distance=ks_statistic(values, model.cdf),
        mc_mean=float(values.mean()),
        mc_var=float(values.var()),
        analytic_mean=model.mean,
        analytic_var=model.var,
    )
