"""Noise-injection studies: how much predictor corruption a metric can
still detect.

The optimal predictor for a rating tensor is the per-pair mean. A
distorted copy multiplies each prediction by (1 + p v) with v drawn once
per pair, uniform on [-1, 1], and the level p scaling it; reusing one v
vector across a whole p grid makes the resulting curves monotone rather
than re-rolling the corruption at every level.

On top sit three studies: the detection-threshold curve (smallest p
whose corruption is detected at a given error-probability bar), the
offset-resolution map (can a relative corruption gap of delta still be
seen when both systems already carry a baseline corruption), and the
leaderboard resolver (are published score gaps larger than the blur).
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .dataio import RatingTensor, estimate_parameters
from .engine import (
    DEFAULT_BINS,
    PURPOSE_NOISE,
    MetricKind,
    MetricSample,
    PredictorSet,
    RatingDistributionSet,
    exceedance_probability,
    sample_metric,
)
from .errors import NumericalError
from .significance import sample_srmse
from .statmath import RandomSeed, stream_generator

__all__ = [
    "NoiseSpec", "ThresholdReport", "AdaptiveNoiseResult", "LeaderboardCell",
    "optimal_recommender", "rating_set_from_tensor", "distort",
    "noise_threshold_curve", "offset_resolution_curves",
    "adaptive_noise_for_metric_gap", "resolve_leaderboard",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative uniform corruption: value -> value (1 + level v).

    v is one U[-1, 1] draw per pair, fixed by (seed, tag); the same spec
    at a different level scales the identical v vector.
    """

    level: float
    seed: RandomSeed = RandomSeed(0)
    tag: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"noise level must be >= 0, got {self.level}")

    def draws(self, count: int) -> np.ndarray:
        gen = stream_generator(self.seed, PURPOSE_NOISE, self.tag, 0)
        return gen.uniform(-1.0, 1.0, count)


def rating_set_from_tensor(tensor: RatingTensor) -> RatingDistributionSet:
    """Per-pair Gaussian rating laws fitted from the tensor."""
    estimates = estimate_parameters(tensor)
    pairs = sorted(estimates)
    mu = np.array([estimates[p].mean for p in pairs])
    sds = [estimates[p].sd for p in pairs]
    if any(s is None for s in sds):
        raise ValueError("tensor has a single trial; no sd estimates")
    return RatingDistributionSet(pairs, mu, np.array(sds))


def optimal_recommender(tensor: RatingTensor) -> PredictorSet:
    """Predict every pair by its rating mean (minimizes expected RMSE)."""
    return PredictorSet(tensor.pairs, tensor.data.mean(axis=2).reshape(-1),
                        label="optimal")


def distort(predictors: PredictorSet, noise: NoiseSpec,
            label: str | None = None) -> PredictorSet:
    """Corrupted copy of a predictor set under the noise spec."""
    v = noise.draws(len(predictors.values))
    values = predictors.values * (1.0 + noise.level * v)
    if label is None:
        label = f"{predictors.label}+noise{noise.level:g}"
    return PredictorSet(predictors.pairs, values, label=label)


def _metric_sample(ratings, predictors, kind, trials, seed, stream_tag,
                   alpha, mode, threads) -> MetricSample:
    if kind is MetricKind.SRMSE:
        return sample_srmse(ratings, predictors, alpha, trials, seed,
                            mode, stream_tag=stream_tag, threads=threads)
    return sample_metric(ratings, predictors, kind, trials, seed,
                         stream_tag=stream_tag, threads=threads)


@dataclass(frozen=True)
class ThresholdReport:
    """Detection-threshold scan of one metric over a noise-level grid."""

    kind: MetricKind
    p_grid: tuple
    curves: tuple          # one (p_error per level) tuple per noise redraw
    thresholds: tuple      # first level detected per redraw, None if never
    alpha_threshold: float
    trials: int

    @property
    def curve(self) -> tuple:
        return self.curves[0]

    @property
    def threshold(self):
        return self.thresholds[0]

    @property
    def threshold_band(self):
        """(min, max) threshold over redraws, ignoring undetected runs."""
        hits = [t for t in self.thresholds if t is not None]
        if not hits:
            return None
        return (min(hits), max(hits))


def noise_threshold_curve(tensor: RatingTensor, kind: MetricKind,
                          p_grid, alpha_threshold: float = 0.05,
                          trials: int = 10**4,
                          seed: RandomSeed = RandomSeed(0), *,
                          alpha: float = 0.05, mode: str = "conditional",
                          noise_repeats: int = 1,
                          threads: int = 1) -> ThresholdReport:
    """Error probability of optimal vs distorted-optimal across noise
    levels, and the first level cleared at the detection bar.

    The optimal system's metric sample and the distorted system's rating
    draws are fixed across the grid (only the corruption level moves),
    so each curve is smooth in p. noise_repeats > 1 redraws the
    corruption direction v to band the threshold.
    """
    p_grid = tuple(float(p) for p in p_grid)
    if not p_grid or any(p < 0 for p in p_grid):
        raise ValueError("p_grid must be nonempty, levels >= 0")
    if sorted(p_grid) != list(p_grid):
        raise ValueError("p_grid must be increasing")
    if not (0.0 < alpha_threshold < 1.0):
        raise ValueError("alpha_threshold must lie in (0, 1)")
    ratings = rating_set_from_tensor(tensor)
    base = optimal_recommender(tensor)
    s_base = _metric_sample(ratings, base, kind, trials, seed, 0,
                            alpha, mode, threads)
    curves, thresholds = [], []
    for rep in range(noise_repeats):
        curve = []
        for p in p_grid:
            noisy = distort(base, NoiseSpec(p, seed, 1 + rep))
            s_noisy = _metric_sample(ratings, noisy, kind, trials, seed, 1,
                                     alpha, mode, threads)
            curve.append(exceedance_probability(s_base, s_noisy))
        curves.append(tuple(curve))
        hit = next((p for p, pe in zip(p_grid, curve)
                    if pe < alpha_threshold), None)
        thresholds.append(hit)
    return ThresholdReport(kind, p_grid, tuple(curves), tuple(thresholds),
                           alpha_threshold, trials)


def offset_resolution_curves(tensor: RatingTensor, deltas, offsets,
                             alpha_threshold: float = 0.05,
                             trials: int = 10**4,
                             seed: RandomSeed = RandomSeed(0), *,
                             kind: MetricKind = MetricKind.RMSE,
                             alpha: float = 0.05,
                             mode: str = "conditional",
                             threads: int = 1) -> dict:
    """P(system at offset o beats system at offset o + delta) over o.

    System A carries corruption level o, system B level o + delta; both
    keep their own corruption direction and rating draws fixed across
    the whole family, so each curve isolates the effect of the shared
    baseline corruption. Returns {delta: [(offset, p_error)]}.
    """
    deltas = tuple(float(d) for d in deltas)
    offsets = tuple(float(o) for o in offsets)
    if any(d < 0 for d in deltas) or any(o < 0 for o in offsets):
        raise ValueError("deltas and offsets must be >= 0")
    ratings = rating_set_from_tensor(tensor)
    base = optimal_recommender(tensor)
    samples_a = {}
    for o in offsets:
        pred_a = distort(base, NoiseSpec(o, seed, 1))
        samples_a[o] = _metric_sample(ratings, pred_a, kind, trials, seed, 0,
                                      alpha, mode, threads)
    out = {}
    for d in deltas:
        curve = []
        for o in offsets:
            pred_b = distort(base, NoiseSpec(o + d, seed, 2))
            s_b = _metric_sample(ratings, pred_b, kind, trials, seed, 1,
                                 alpha, mode, threads)
            curve.append((o, exceedance_probability(samples_a[o], s_b)))
        out[d] = curve
    return out


@dataclass(frozen=True)
class AdaptiveNoiseResult:
    """Noise level realizing a target relative metric gap."""

    level: float
    achieved_gap: float
    base_mean: float
    distorted_mean: float
    iterations: int


def adaptive_noise_for_metric_gap(tensor: RatingTensor, target_gap: float,
                                  base_offset: float = 0.0,
                                  trials: int = 10**4,
                                  seed: RandomSeed = RandomSeed(0), *,
                                  kind: MetricKind = MetricKind.RMSE,
                                  alpha: float = 0.05,
                                  mode: str = "conditional",
                                  tol: float = 1e-3, max_iter: int = 80,
                                  threads: int = 1) -> AdaptiveNoiseResult:
    """Bisect the corruption level until the distorted system's mean
    metric exceeds the baseline system's by target_gap (relative).

    The baseline carries corruption base_offset with its own direction;
    the distorted system reuses one direction and one set of rating
    draws for every candidate level, so the gap is a deterministic
    monotone function of the level and bisection converges. Raises
    NumericalError when the target cannot be bracketed or tol is not
    reached within max_iter.
    """
    if target_gap < 0:
        raise ValueError("target_gap must be >= 0")
    ratings = rating_set_from_tensor(tensor)
    base = optimal_recommender(tensor)
    pred_a = distort(base, NoiseSpec(base_offset, seed, 1)) \
        if base_offset > 0 else base
    s_a = _metric_sample(ratings, pred_a, kind, trials, seed, 0,
                         alpha, mode, threads)
    base_mean = float(np.mean(s_a.values))

    def gap_at(level: float) -> float:
        pred_b = distort(base, NoiseSpec(level, seed, 2))
        s_b = _metric_sample(ratings, pred_b, kind, trials, seed, 1,
                             alpha, mode, threads)
        return float(np.mean(s_b.values)) / base_mean - 1.0

    iters = 0
    lo, g_lo = 0.0, gap_at(0.0)
    at_floor = abs(g_lo - target_gap) <= tol or \
        (g_lo > target_gap and g_lo - target_gap <= 10 * tol)
    if at_floor:
        # at the target within the MC noise floor; bisection from below
        # is either pointless or impossible
        pred_b = distort(base, NoiseSpec(0.0, seed, 2))
        s_b = _metric_sample(ratings, pred_b, kind, trials, seed, 1,
                             alpha, mode, threads)
        return AdaptiveNoiseResult(0.0, g_lo, base_mean,
                                   float(np.mean(s_b.values)), 1)
    if g_lo > target_gap:
        raise NumericalError(
            f"gap at zero corruption already {g_lo:.4f} > target "
            f"{target_gap:.4f}; base offset too large")
    hi = max(0.05, 2.0 * base_offset)
    g_hi = gap_at(hi)
    iters += 2
    while g_hi < target_gap:
        hi *= 2.0
        if hi > 64.0:
            raise NumericalError(
                f"target gap {target_gap:.4f} not bracketed by level 64 "
                f"(gap there {g_hi:.4f})")
        g_hi = gap_at(hi)
        iters += 1
    level, achieved = hi, g_hi
    while iters < max_iter:
        mid = 0.5 * (lo + hi)
        g_mid = gap_at(mid)
        iters += 1
        if abs(g_mid - target_gap) <= tol:
            level, achieved = mid, g_mid
            break
        if g_mid < target_gap:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
        if hi - lo < 1e-9:
            level, achieved = mid, g_mid
            break
    else:
        raise NumericalError(
            f"bisection did not reach tol {tol} within {max_iter} "
            f"evaluations; bracket [{lo:.6f}, {hi:.6f}], gaps "
            f"[{g_lo:.5f}, {g_hi:.5f}]")
    if abs(achieved - target_gap) > 10 * tol:
        raise NumericalError(
            f"bisection stalled: achieved gap {achieved:.5f} vs target "
            f"{target_gap:.5f}")
    pred_b = distort(base, NoiseSpec(level, seed, 2))
    s_b = _metric_sample(ratings, pred_b, kind, trials, seed, 1,
                         alpha, mode, threads)
    return AdaptiveNoiseResult(level, achieved, base_mean,
                               float(np.mean(s_b.values)), iters)


@dataclass(frozen=True)
class LeaderboardCell:
    """One entry-at-offset verdict."""

    label: str
    offset: float
    relative_gap: float
    noise_level: float | None
    p_error: float | None
    resolvable: bool | None


def resolve_leaderboard(entries, offsets, tensor: RatingTensor,
                        alpha_threshold: float = 0.05,
                        trials: int = 10**4,
                        seed: RandomSeed = RandomSeed(0), *,
                        kind: MetricKind = MetricKind.RMSE,
                        alpha: float = 0.05, mode: str = "conditional",
                        tol: float = 1e-3, threads: int = 1) -> list:
    """Decide which published score gaps survive rating blur.

    entries is [(label, score)]; the smallest score is the reference.
    Each other entry's relative gap is replayed as a corruption level on
    the tensor's optimal recommender at every baseline offset, and the
    gap counts as resolvable when the error probability of the resulting
    comparison clears alpha_threshold. The reference entry gets a None
    verdict (nothing to compare).
    """
    if len(entries) < 2:
        raise ValueError("need at least two leaderboard entries")
    labels = [label for label, _ in entries]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate leaderboard labels")
    scores = {label: float(score) for label, score in entries}
    for label, score in scores.items():
        if score <= 0:
            raise ValueError(f"entry {label!r} has nonpositive score {score}")
    best_label = min(scores, key=lambda l: (scores[l], l))
    best = scores[best_label]
    ratings = rating_set_from_tensor(tensor)
    base = optimal_recommender(tensor)
    cells = []
    for offset in (float(o) for o in offsets):
        pred_a = distort(base, NoiseSpec(offset, seed, 1)) \
            if offset > 0 else base
        s_a = _metric_sample(ratings, pred_a, kind, trials, seed, 0,
                             alpha, mode, threads)
        for label, _ in entries:
            rel = scores[label] / best - 1.0
            if label == best_label:
                cells.append(LeaderboardCell(label, offset, 0.0, None, None,
                                             None))
                continue
            result = adaptive_noise_for_metric_gap(
                tensor, rel, base_offset=offset, trials=trials, seed=seed,
                kind=kind, alpha=alpha, mode=mode, tol=tol, threads=threads)
            pred_b = distort(base, NoiseSpec(result.level, seed, 2))
            s_b = _metric_sample(ratings, pred_b, kind, trials, seed, 1,
                                 alpha, mode, threads)
            p_err = exceedance_probability(s_a, s_b)
            cells.append(LeaderboardCell(label, offset, rel, result.level,
                                         p_err, p_err < alpha_threshold))
    return cells
