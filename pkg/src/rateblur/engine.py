"""Monte Carlo metric distributions and distribution comparisons.

A rating scenario is a set of Gaussian rating distributions indexed by
(user, item) pairs. Repeating the scenario many times turns a scalar
accuracy metric into a sample from the metric's distribution; densities,
overlap areas and ranking error probabilities are computed from those
samples.

Trials are partitioned into fixed-size blocks, each owning a derived
Philox stream, so results are bit-identical for any thread count and
two predictor sets can share rating draws (common random numbers) or
use independent draws simply by choosing stream tags.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IndexMismatchError
from .statmath import GaussianParams, RandomSeed, stream_generator

__all__ = [
    "MetricKind",
    "RatingDistributionSet",
    "PredictorSet",
    "MetricSample",
    "EmpiricalDensity",
    "ComparisonResult",
    "sample_metric",
    "estimate_density",
    "overlap_area",
    "density_intersection",
    "error_probability",
    "compare_predictors",
]

DEFAULT_TRIALS = 10**6
DEFAULT_BINS = 55
BLOCK_SIZE = 8192

# Purpose words keep derived streams from colliding across subsystems.
PURPOSE_METRIC = 1
PURPOSE_TAIL = 2
PURPOSE_NOISE = 3
PURPOSE_SYNTH = 4


class MetricKind(enum.Enum):
    RMSE = "rmse"
    SRMSE = "srmse"
    MAE = "mae"
    MSD = "msd"


_KIND_CODE = {
    MetricKind.RMSE: _kernels.KIND_RMSE,
    MetricKind.MAE: _kernels.KIND_MAE,
    MetricKind.MSD: _kernels.KIND_MSD,
}


def _canonical(pairs, values_list):
    pairs = [tuple(p) for p in pairs]
    if len(set(pairs)) != len(pairs):
        raise ValueError("duplicate (user, item) pairs")
    order = sorted(range(len(pairs)), key=lambda i: pairs[i])
    arrays = [np.asarray(v, dtype=float)[order] for v in values_list]
    return tuple(pairs[i] for i in order), arrays


@dataclass(eq=False)
class RatingDistributionSet:
    """Gaussian rating distribution per (user, item) pair.

    Pairs are kept in canonical sorted order; sigma = 0 entries are point
    masses and stay legal everywhere in the sampling path.
    """

    pairs: tuple
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if len(self.pairs) == 0:
            raise ValueError("need at least one rating distribution")
        self.pairs, (self.mu, self.sigma) = _canonical(self.pairs, [self.mu, self.sigma])
        if not np.all(np.isfinite(self.mu)):
            raise ValueError("non-finite mu")
        if not np.all(np.isfinite(self.sigma)) or np.any(self.sigma < 0):
            raise ValueError("sigma must be finite and >= 0")

    @classmethod
    def from_mapping(cls, mapping) -> "RatingDistributionSet":
        """Build from {(user, item): GaussianParams}."""
        pairs = list(mapping)
        mu = [mapping[p].mu for p in pairs]
        sigma = [mapping[p].sigma for p in pairs]
        return cls(pairs, mu, sigma)

    def params(self, pair) -> GaussianParams:
        i = self.pairs.index(tuple(pair))
        return GaussianParams(float(self.mu[i]), float(self.sigma[i]))

    def __len__(self):
        return len(self.pairs)


@dataclass(eq=False)
class PredictorSet:
    """One recommender's point predictions, aligned to the same pairs."""

    pairs: tuple
    values: np.ndarray
    label: str = "predictor"

    def __post_init__(self):
        if len(self.pairs) == 0:
            raise ValueError("need at least one prediction")
        self.pairs, (self.values,) = _canonical(self.pairs, [self.values])
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite prediction")

    @classmethod
    def from_mapping(cls, mapping, label: str = "predictor") -> "PredictorSet":
        pairs = list(mapping)
        return cls(pairs, [mapping[p] for p in pairs], label)

    def __len__(self):
        return len(self.pairs)


def check_alignment(ratings: RatingDistributionSet, predictors: PredictorSet):
    """Raise IndexMismatchError naming the offending pairs if the index
    sets differ."""
    if ratings.pairs == predictors.pairs:
        return
    rset, pset = set(ratings.pairs), set(predictors.pairs)
    missing = sorted(rset - pset)
    extra = sorted(pset - rset)
    parts = []
    if missing:
        shown = ", ".join(map(str, missing[:10]))
        parts.append(f"{len(missing)} pairs lack predictions (first: {shown})")
    if extra:
        shown = ", ".join(map(str, extra[:10]))
        parts.append(f"{len(extra)} predictions have no rating distribution (first: {shown})")
    raise IndexMismatchError("; ".join(parts))


@dataclass(eq=False)
class MetricSample:
    """tau metric values drawn under repeated rating scenarios."""

    kind: MetricKind
    values: np.ndarray
    n_pairs: int
    seed: RandomSeed
    label: str = ""

    @property
    def trials(self) -> int:
        return len(self.values)


@dataclass(eq=False)
class EmpiricalDensity:
    """Histogram density: bins+1 edges, bins nonnegative heights.

    Heights integrate to 1. A constant sample produces a single spike bin
    and is flagged degenerate.
    """

    edges: np.ndarray
    heights: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.heights = np.asarray(self.heights, dtype=float)
        if len(self.edges) != len(self.heights) + 1:
            raise ValueError("edges must be one longer than heights")
        if np.any(self.heights < 0):
            raise ValueError("negative density height")

    @property
    def bins(self) -> int:
        return len(self.heights)

    def total_mass(self) -> float:
        return float(np.sum(self.heights * np.diff(self.edges)))

    def heights_at(self, x) -> np.ndarray:
        """Piecewise-constant evaluation; zero outside the support."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.bins) & (x < self.edges[-1])
        out = np.zeros_like(x)
        out[inside] = self.heights[idx[inside]]
        return out

    def to_dict(self) -> dict:
        return {
            "edges": [float(e) for e in self.edges],
            "heights": [float(h) for h in self.heights],
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class ComparisonResult:
    """Outcome of ranking two metric distributions.

    order lists (better, worse) by smaller sample mean; p_error is the
    probability that the better-ranked system shows the larger metric
    value anyway, so values near 0.5 mean the ranking carries no evidence.
    """

    order: tuple
    p_error: float
    overlap_a: float
    tau_used: int
    mean_better: float
    mean_worse: float
    estimator: str = "paired"


def _blocked_transform(mu, sigma, pi, reducer, trials, seed, purpose, stream_tag,
                       threads, block_size):
    """Run `reducer(z_block, out_block)` over fixed-size trial blocks.

    Block boundaries and per-block streams depend only on (seed, purpose,
    stream_tag, block index), never on the thread count.
    """
    out = np.empty(trials)
    n = len(mu)
    starts = range(0, trials, block_size)

    def run_block(start):
        stop = min(start + block_size, trials)
        gen = stream_generator(seed, purpose, stream_tag, start // block_size)
        z = gen.standard_normal((stop - start, n))
        reducer(z, out[start:stop])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_block, starts))
    else:
        for start in starts:
            run_block(start)
    return out


def sample_metric(ratings: RatingDistributionSet, predictors: PredictorSet,
                  kind: MetricKind = MetricKind.RMSE, trials: int = DEFAULT_TRIALS,
                  seed: RandomSeed = RandomSeed(0), *, stream_tag: int = 0,
                  threads: int = 1, block_size: int = BLOCK_SIZE) -> MetricSample:
    """Draw tau values of the metric under repeated rating scenarios.

    Each trial draws every rating from its Gaussian and reduces the
    deviations (prediction - rating) with the requested metric. Equal
    (seed, stream_tag) reuse identical rating draws, which is how a
    common-random-numbers comparison is requested; distinct tags give
    independent draws.

    The significance-filtered metric needs test intervals and lives in
    the significance module.
    """
    check_alignment(ratings, predictors)
    if kind not in _KIND_CODE:
        raise ValueError(f"{kind} is not sampled here; see significance.sample_srmse")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    code = _KIND_CODE[kind]
    mu, sigma, pi = ratings.mu, ratings.sigma, predictors.values

    def reducer(z, out_block):
        _kernels.metric_reduce(z, mu, sigma, pi, code, out_block)

    values = _blocked_transform(mu, sigma, pi, reducer, trials, seed,
                                PURPOSE_METRIC, stream_tag, threads, block_size)
    return MetricSample(kind, values, len(ratings), seed, predictors.label)


def estimate_density(values, bins: int = DEFAULT_BINS,
                     span: tuple | None = None) -> EmpiricalDensity:
    """Histogram density over the sample range (or an explicit span).

    bins >= 2 required. A constant sample cannot span a range; it becomes
    a single-bin spike flagged degenerate.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    if span is None:
        lo, hi = float(values.min()), float(values.max())
    else:
        lo, hi = float(span[0]), float(span[1])
    if lo == hi:
        half = max(abs(lo), 1.0) * 1e-9
        edges = np.array([lo - half, lo + half])
        return EmpiricalDensity(edges, np.array([0.5 / half]), degenerate=True)
    heights, edges = np.histogram(values, bins=bins, range=(lo, hi), density=True)
    mass = np.sum(heights * np.diff(edges))
    return EmpiricalDensity(edges, heights / mass)


def density_pair(values_a, values_b, bins: int = DEFAULT_BINS):
    """Two densities binned on one shared edge grid spanning both samples.

    Comparing histograms with private edges adds an O(bin width)
    misalignment term to any overlap functional even for identical
    distributions; shared edges remove it, leaving pure sampling noise.
    """
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    lo = min(float(a.min()), float(b.min()))
    hi = max(float(a.max()), float(b.max()))
    return (estimate_density(a, bins, span=(lo, hi)),
            estimate_density(b, bins, span=(lo, hi)))


def _merged_heights(d1: EmpiricalDensity, d2: EmpiricalDensity):
    edges = np.union1d(d1.edges, d2.edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return np.diff(edges), d1.heights_at(mids), d2.heights_at(mids)


def overlap_area(d1: EmpiricalDensity, d2: EmpiricalDensity) -> float:
    """Integral of |f1 - f2| on the merged bin grid: 0 for identical
    densities, 2 for disjoint supports."""
    widths, h1, h2 = _merged_heights(d1, d2)
    return float(np.sum(np.abs(h1 - h2) * widths))


def density_intersection(d1: EmpiricalDensity, d2: EmpiricalDensity) -> float:
    """Integral of min(f1, f2): 1 for identical densities, 0 for disjoint.
    Relates to the L1 area by |f1-f2| = f1 + f2 - 2 min(f1, f2)."""
    widths, h1, h2 = _merged_heights(d1, d2)
    return float(np.sum(np.minimum(h1, h2) * widths))


def exceedance_probability(sample1: MetricSample, sample2: MetricSample,
                           estimator: str = "paired") -> float:
    """P(sample1's value > sample2's value), ties weighted 1/2, with the
    given order kept fixed.

    "paired" counts trial-by-trial; "product" counts all cross pairs, the
    estimator implied by treating the two distributions as independent.
    On independently generated samples both estimate the same
    probability; on shared rating draws only "product" does.
    """
    if sample1.trials != sample2.trials:
        raise ValueError("samples must have equal trial counts")
    if estimator not in ("paired", "product"):
        raise ValueError(f"unknown estimator {estimator!r}")
    tau = sample1.trials
    a, b = sample1.values, sample2.values
    if estimator == "paired":
        gt = np.count_nonzero(a > b)
        eq = np.count_nonzero(a == b)
        return float((gt + 0.5 * eq) / tau)
    sb = np.sort(b)
    lt = np.searchsorted(sb, a, side="left")
    le = np.searchsorted(sb, a, side="right")
    return float(np.sum(lt) + 0.5 * np.sum(le - lt)) / (tau * tau)


def error_probability(sample1: MetricSample, sample2: MetricSample,
                      bins: int = DEFAULT_BINS, estimator: str = "paired") -> ComparisonResult:
    """Rank two metric samples by mean and estimate the ranking's error
    probability P(better's value > worse's value)."""
    tau = sample1.trials
    label1 = sample1.label or "sample1"
    label2 = sample2.label or "sample2"
    m1, m2 = float(sample1.values.mean()), float(sample2.values.mean())
    if m1 <= m2:
        better, worse = sample1, sample2
        order = (label1, label2)
        mb, mw = m1, m2
    else:
        better, worse = sample2, sample1
        order = (label2, label1)
        mb, mw = m2, m1
    p = exceedance_probability(better, worse, estimator)
    a = overlap_area(*density_pair(sample1.values, sample2.values, bins))
    return ComparisonResult(order, float(p), a, tau, mb, mw, estimator)


def compare_predictors(ratings: RatingDistributionSet, pred_a: PredictorSet,
                       pred_b: PredictorSet, kind: MetricKind = MetricKind.RMSE,
                       trials: int = DEFAULT_TRIALS, seed: RandomSeed = RandomSeed(0),
                       *, coupled: bool = False, bins: int = DEFAULT_BINS,
                       estimator: str = "paired", threads: int = 1):
    """Sample both predictors' metrics and compare them.

    Independent rating draws per system by default (the two metric
    distributions are treated as independent random variables); coupled
    scores both systems against identical realized ratings.
    """
    tag_b = 0 if coupled else 1
    s_a = sample_metric(ratings, pred_a, kind, trials, seed, stream_tag=0, threads=threads)
    s_b = sample_metric(ratings, pred_b, kind, trials, seed, stream_tag=tag_b, threads=threads)
    return s_a, s_b, error_probability(s_a, s_b, bins, estimator)
