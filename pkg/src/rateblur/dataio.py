"""Rating tensors: load/save, estimation, synthesis, validation.

A rating tensor holds repeated ratings: ``data[u, i, t]`` is the rating
user u gave item i on trial t. Tensors must be complete (every user/item
pair rated on every trial); estimation and the simulations all assume
it.

The CSV interchange format is long form with header
``user,item,trial,rating``, one observation per row, trials numbered
from 1. Ids may be integers or strings; they are sorted (numerically
when possible) to fix the tensor axes.

Synthesis draws each user/item slice from a latent Gaussian and rounds
onto the rating scale. A calibration profile controls the per-item
fraction of noisy slices, the latent parameter laws, and an optional
chaotic-rater mixture (a small fraction of slices with a much wider
latent sigma, giving the heavy-dispersion tail real panels show).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _st

from .engine import PURPOSE_SYNTH
from .errors import DataFormatError
from .statmath import RandomSeed, stream_generator

__all__ = [
    "RatingScale", "RatingTensor", "ParameterEstimate", "CalibrationProfile",
    "ValidationReport", "load_tensor", "save_tensor", "estimate_parameters",
    "synthesize_tensor", "validate_tensor", "estimate_ks_power",
    "DEFAULT_PROFILE",
]

_HEADER = ("user", "item", "trial", "rating")


@dataclass(frozen=True)
class RatingScale:
    """Discrete rating scale: values min, min+step, ..., max."""

    lo: float = 1.0
    hi: float = 5.0
    step: float = 1.0

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError("scale needs hi > lo")
        if self.step <= 0:
            raise ValueError("scale step must be > 0")

    def snap(self, x: np.ndarray) -> np.ndarray:
        """Round onto the scale and clip to its range."""
        snapped = self.lo + np.round((np.asarray(x, dtype=float) - self.lo)
                                     / self.step) * self.step
        return np.clip(snapped, self.lo, self.hi)


@dataclass(frozen=True)
class RatingTensor:
    """Complete repeated-rating data, shape (users, items, trials)."""

    users: tuple
    items: tuple
    data: np.ndarray = field(repr=False)
    scale: RatingScale | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 3:
            raise DataFormatError(f"tensor data must be 3-d, got {data.ndim}-d")
        if data.shape[:2] != (len(self.users), len(self.items)):
            raise DataFormatError(
                f"data shape {data.shape} does not match {len(self.users)} "
                f"users x {len(self.items)} items")
        if data.shape[2] < 1:
            raise DataFormatError("tensor needs at least one trial")
        if np.isnan(data).any():
            raise DataFormatError("tensor is incomplete (missing ratings)")
        object.__setattr__(self, "data", data)

    @property
    def trials(self) -> int:
        return self.data.shape[2]

    @property
    def pairs(self) -> list:
        return [(u, i) for u in self.users for i in self.items]

    def trial_slice(self, t: int) -> np.ndarray:
        """Flat vector of all ratings from trial t (1-based), pair order."""
        if not (1 <= t <= self.trials):
            raise ValueError(f"trial {t} out of range 1..{self.trials}")
        return self.data[:, :, t - 1].reshape(-1)


@dataclass(frozen=True)
class ParameterEstimate:
    """Sample mean and sd (Bessel) for one user/item slice."""

    mean: float
    sd: float | None
    n_obs: int


def _id_sort_key(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, v)


def _parse_id(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return text


def load_tensor(path, scale: RatingScale | None = None) -> RatingTensor:
    """Read a long-form CSV into a complete tensor.

    Errors carry 1-based line numbers. Duplicate (user, item, trial)
    rows and incomplete tensors are rejected.
    """
    rows = {}
    users, items = set(), set()
    max_trial = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip().lower() for h in header) != _HEADER:
            raise DataFormatError(
                f"{path}: line 1: expected header user,item,trial,rating, "
                f"got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            user, item = _parse_id(row[0]), _parse_id(row[1])
            try:
                trial = int(row[2])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: trial must be an integer, "
                    f"got {row[2]!r}") from None
            if trial < 1:
                raise DataFormatError(
                    f"{path}: line {lineno}: trial must be >= 1, got {trial}")
            try:
                rating = float(row[3])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: rating must be numeric, "
                    f"got {row[3]!r}") from None
            if not np.isfinite(rating):
                raise DataFormatError(
                    f"{path}: line {lineno}: rating must be finite")
            key = (user, item, trial)
            if key in rows:
                raise DataFormatError(
                    f"{path}: line {lineno}: duplicate observation for "
                    f"user={user} item={item} trial={trial}")
            rows[key] = rating
            users.add(user)
            items.add(item)
            max_trial = max(max_trial, trial)
    if not rows:
        raise DataFormatError(f"{path}: no observations")
    users = tuple(sorted(users, key=_id_sort_key))
    items = tuple(sorted(items, key=_id_sort_key))
    data = np.full((len(users), len(items), max_trial), np.nan)
    uidx = {u: k for k, u in enumerate(users)}
    iidx = {i: k for k, i in enumerate(items)}
    for (user, item, trial), rating in rows.items():
        data[uidx[user], iidx[item], trial - 1] = rating
    missing = np.argwhere(np.isnan(data))
    if len(missing):
        examples = ", ".join(
            f"(user={users[u]}, item={items[i]}, trial={t + 1})"
            for u, i, t in missing[:5])
        raise DataFormatError(
            f"{path}: tensor incomplete, {len(missing)} missing observations, "
            f"first: {examples}")
    return RatingTensor(users, items, data, scale)


def save_tensor(tensor: RatingTensor, path) -> None:
    """Write the tensor as long-form CSV (header user,item,trial,rating)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_HEADER)
        for u, user in enumerate(tensor.users):
            for i, item in enumerate(tensor.items):
                for t in range(tensor.trials):
                    writer.writerow([user, item, t + 1,
                                     repr(float(tensor.data[u, i, t]))])


def estimate_parameters(tensor: RatingTensor) -> dict:
    """Per-pair sample mean and Bessel sd; sd is None with one trial."""
    means = tensor.data.mean(axis=2)
    if tensor.trials >= 2:
        sds = tensor.data.std(axis=2, ddof=1)
    else:
        sds = None
    out = {}
    for u, user in enumerate(tensor.users):
        for i, item in enumerate(tensor.items):
            sd = None if sds is None else float(sds[u, i])
            out[(user, item)] = ParameterEstimate(float(means[u, i]), sd,
                                                  tensor.trials)
    return out


@dataclass(frozen=True)
class CalibrationProfile:
    """Latent-parameter laws for tensor synthesis.

    noisy_fractions gives, per item, the fraction of users whose slice
    is noisy (the rest re-rate identically, sigma = 0). Noisy slices
    draw mu uniform on mu_range and sigma uniform on sigma_range, except
    a chaotic_fraction of them which draw sigma uniform on
    chaotic_sigma_range instead; those model raters whose re-ratings
    swing across the whole scale.
    """

    noisy_fractions: tuple = (0.90, 0.60, 0.50, 0.69, 0.51)
    trials: int = 5
    scale: RatingScale = RatingScale()
    mu_range: tuple = (1.5, 4.5)
    sigma_range: tuple = (0.15, 0.25)
    chaotic_fraction: float = 0.09
    chaotic_sigma_range: tuple = (2.4, 3.2)

    def __post_init__(self):
        if not self.noisy_fractions:
            raise ValueError("need at least one item fraction")
        for f in self.noisy_fractions:
            if not (0.0 <= f <= 1.0):
                raise ValueError(f"noisy fraction {f} outside [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name, rng in (("mu_range", self.mu_range),
                          ("sigma_range", self.sigma_range),
                          ("chaotic_sigma_range", self.chaotic_sigma_range)):
            if len(rng) != 2 or not (rng[1] >= rng[0]):
                raise ValueError(f"{name} must be (lo, hi) with hi >= lo")
        if self.sigma_range[0] <= 0:
            raise ValueError("sigma_range must be positive")
        if not (0.0 <= self.chaotic_fraction <= 1.0):
            raise ValueError("chaotic_fraction outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "noisy_fractions": list(self.noisy_fractions),
            "trials": self.trials,
            "scale": [self.scale.lo, self.scale.hi, self.scale.step],
            "mu_range": list(self.mu_range),
            "sigma_range": list(self.sigma_range),
            "chaotic_fraction": self.chaotic_fraction,
            "chaotic_sigma_range": list(self.chaotic_sigma_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationProfile":
        known = {"noisy_fractions", "trials", "scale", "mu_range",
                 "sigma_range", "chaotic_fraction", "chaotic_sigma_range"}
        unknown = set(d) - known
        if unknown:
            raise DataFormatError(
                f"unknown profile keys: {sorted(unknown)}")
        kwargs = {}
        if "noisy_fractions" in d:
            kwargs["noisy_fractions"] = tuple(d["noisy_fractions"])
        if "trials" in d:
            kwargs["trials"] = int(d["trials"])
        if "scale" in d:
            lo, hi, step = d["scale"]
            kwargs["scale"] = RatingScale(lo, hi, step)
        for key in ("mu_range", "sigma_range", "chaotic_sigma_range"):
            if key in d:
                kwargs[key] = tuple(d[key])
        if "chaotic_fraction" in d:
            kwargs["chaotic_fraction"] = float(d["chaotic_fraction"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "CalibrationProfile":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise DataFormatError(f"{path}: profile must be a JSON object")
        return cls.from_dict(raw)

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


DEFAULT_PROFILE = CalibrationProfile()

_MAX_REDRAWS = 1000


def synthesize_tensor(profile: CalibrationProfile, users: int = 67,
                      seed: RandomSeed = RandomSeed(0), *,
                      return_latent: bool = False):
    """Draw a complete tensor from the profile's latent laws.

    Designated-noisy slices redraw their ratings (fresh latent sigma
    after every 50 failures) until the rounded trials are not all
    identical, so the realized noisy fraction matches the designation.
    Quiet slices repeat one rounded rating.
    """
    if users < 1:
        raise ValueError("users must be >= 1")
    n_items = len(profile.noisy_fractions)
    trials = profile.trials
    if trials < 2:
        raise ValueError("synthesis needs >= 2 trials for noisy slices")
    gen = stream_generator(seed, PURPOSE_SYNTH, 0, 0)
    data = np.empty((users, n_items, trials))
    latent_mu = np.empty((users, n_items))
    latent_sigma = np.empty((users, n_items))
    mu_lo, mu_hi = profile.mu_range
    for i, frac in enumerate(profile.noisy_fractions):
        n_noisy = int(round(frac * users))
        order = gen.permutation(users)
        noisy_users = set(order[:n_noisy].tolist())
        for u in range(users):
            mu = gen.uniform(mu_lo, mu_hi)
            if u in noisy_users:
                sigma = _draw_sigma(gen, profile)
                ratings = profile.scale.snap(gen.normal(mu, sigma, trials))
                redraws = 0
                while np.all(ratings == ratings[0]):
                    redraws += 1
                    if redraws > _MAX_REDRAWS:
                        raise RuntimeError(
                            "could not realize a noisy slice; profile sigma "
                            "too small for the scale")
                    if redraws % 50 == 0:
                        sigma = _draw_sigma(gen, profile)
                    ratings = profile.scale.snap(gen.normal(mu, sigma, trials))
            else:
                sigma = 0.0
                ratings = np.repeat(profile.scale.snap(np.array([mu]))[0],
                                    trials)
            data[u, i] = ratings
            latent_mu[u, i] = mu
            latent_sigma[u, i] = sigma
    tensor = RatingTensor(tuple(range(1, users + 1)),
                          tuple(range(1, n_items + 1)), data, profile.scale)
    if return_latent:
        return tensor, {"mu": latent_mu, "sigma": latent_sigma}
    return tensor


def _draw_sigma(gen, profile: CalibrationProfile) -> float:
    if profile.chaotic_fraction > 0 and gen.uniform() < profile.chaotic_fraction:
        lo, hi = profile.chaotic_sigma_range
    else:
        lo, hi = profile.sigma_range
    return gen.uniform(lo, hi)


@dataclass(frozen=True)
class ValidationReport:
    """Distributional diagnostics for a tensor.

    ks_rejections counts noisy slices whose trials reject Gaussianity at
    level alpha; with fitted parameters the test is anticonservative in
    name only, its power at a handful of trials is near zero, so
    fitted_params_caveat flags that the check can certify almost
    nothing. welch_p / levene_p hold the upper triangle of pairwise
    trial-cohort comparisons (mean and dispersion stability over time).
    """

    alpha: float
    n_slices: int
    n_noisy: int
    noisy_fraction_per_item: tuple
    ks_tested: int
    ks_rejections: int
    ks_min_p: float | None
    fitted_params_caveat: bool
    welch_p: dict
    levene_p: dict
    welch_rejections: int
    levene_rejections: int
    ks_power: float | None = None

    @property
    def cohorts_consistent(self) -> bool:
        return self.welch_rejections == 0 and self.levene_rejections == 0


def validate_tensor(tensor: RatingTensor, alpha: float = 0.05,
                    reference: dict | None = None, *,
                    power_check: bool = False,
                    power_seed: RandomSeed = RandomSeed(0)) -> ValidationReport:
    """Run the Gaussianity and cohort-stability battery.

    Per noisy slice: KS against N(mean, sd). With reference latent
    parameters the test is exact; otherwise parameters are fitted from
    the same trials and fitted_params_caveat is set. Across trials:
    Welch (means) and Levene (dispersions) on every cohort pair.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if tensor.trials < 2:
        raise DataFormatError("validation needs >= 2 trials")
    sds = tensor.data.std(axis=2, ddof=1)
    means = tensor.data.mean(axis=2)
    noisy_mask = sds > 0.0
    n_noisy = int(noisy_mask.sum())
    per_item = tuple(float(noisy_mask[:, i].mean())
                     for i in range(len(tensor.items)))

    ks_tested = 0
    ks_rejections = 0
    ks_min_p = None
    for u in range(len(tensor.users)):
        for i in range(len(tensor.items)):
            if reference is not None:
                key = (tensor.users[u], tensor.items[i])
                if key not in reference:
                    raise DataFormatError(
                        f"reference parameters missing for pair {key}")
                mu, sd = reference[key]
            else:
                mu, sd = means[u, i], sds[u, i]
            if sd <= 0.0:
                continue
            res = _st.kstest(tensor.data[u, i], "norm", args=(mu, sd))
            ks_tested += 1
            if res.pvalue < alpha:
                ks_rejections += 1
            ks_min_p = res.pvalue if ks_min_p is None else min(ks_min_p,
                                                               res.pvalue)

    welch_p, levene_p = {}, {}
    welch_rej = levene_rej = 0
    for t1 in range(1, tensor.trials + 1):
        for t2 in range(t1 + 1, tensor.trials + 1):
            a, b = tensor.trial_slice(t1), tensor.trial_slice(t2)
            wp = float(_st.ttest_ind(a, b, equal_var=False).pvalue)
            lp = float(_st.levene(a, b, center="median").pvalue)
            welch_p[(t1, t2)] = wp
            levene_p[(t1, t2)] = lp
            welch_rej += wp < alpha
            levene_rej += lp < alpha

    power = None
    if power_check:
        power = estimate_ks_power(tensor.trials, alpha, power_seed,
                                  scale=tensor.scale or RatingScale())
    return ValidationReport(
        alpha=alpha,
        n_slices=len(tensor.users) * len(tensor.items),
        n_noisy=n_noisy,
        noisy_fraction_per_item=per_item,
        ks_tested=ks_tested,
        ks_rejections=ks_rejections,
        ks_min_p=None if ks_min_p is None else float(ks_min_p),
        fitted_params_caveat=reference is None,
        welch_p=welch_p,
        levene_p=levene_p,
        welch_rejections=int(welch_rej),
        levene_rejections=int(levene_rej),
        ks_power=power,
    )


def estimate_ks_power(n_obs: int, alpha: float = 0.05,
                      seed: RandomSeed = RandomSeed(0), *,
                      scale: RatingScale = RatingScale(),
                      reps: int = 2000) -> float:
    """MC power of the fitted-parameter KS test against a uniform rater.

    Draws reps samples of n_obs ratings uniform over the scale (about as
    non-Gaussian as a rater gets) and reports the rejection fraction of
    the same fitted-KS used in validate_tensor. At n_obs typical of
    re-rating studies this lands near alpha: the test cannot certify
    Gaussianity, it can only fail to reject.
    """
    if n_obs < 3:
        raise ValueError("power estimate needs n_obs >= 3")
    gen = stream_generator(seed, PURPOSE_SYNTH, 1, 0)
    rejections = 0
    tested = 0
    values = np.arange(scale.lo, scale.hi + 0.5 * scale.step, scale.step)
    for _ in range(reps):
        sample = gen.choice(values, size=n_obs)
        sd = sample.std(ddof=1)
        if sd == 0.0:
            continue
        res = _st.kstest(sample, "norm", args=(sample.mean(), sd))
        tested += 1
        rejections += res.pvalue < alpha
    if tested == 0:
        return 0.0
    return rejections / tested
