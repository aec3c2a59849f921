import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rateblur.dataio import ParameterEstimate, estimate_parameters
from rateblur.statmath import RandomSeed
from rateblur.uncertainty import (
    build_borderline,
    ci_width_exponents,
    confidence_intervals,
    convergence_error_probability,
    convergence_to_stationary,
    simulate_borderline_rmse,
    tensor_recommenders,
)

# worked example x_bar=3, s=1, n=5, alpha=0.05 (mpmath, 30 digits):
# mu half-width = t_{.975,4} / sqrt(5), sigma bounds from chi2_{4}
MU_LO = 1.7583360017962354
MU_HI = 4.2416639982037646
SIGMA_LO = 0.59913313913414083
SIGMA_HI = 2.8735556340782193


class TestConfidenceIntervals:
    def test_worked_example_frozen(self):
        pair = confidence_intervals(ParameterEstimate(3.0, 1.0, 5), 0.05)
        assert pair.mu == pytest.approx((MU_LO, MU_HI), abs=1e-12)
        assert pair.sigma == pytest.approx((SIGMA_LO, SIGMA_HI), abs=1e-12)

    def test_worked_example_three_decimals(self):
        pair = confidence_intervals(ParameterEstimate(3.0, 1.0, 5), 0.05)
        assert round(pair.mu[0], 3) == 1.758
        assert round(pair.mu[1], 3) == 4.242
        assert round(pair.sigma[0], 3) == 0.599
        assert round(pair.sigma[1], 3) == 2.874

    def test_requires_sd(self):
        with pytest.raises(ValueError):
            confidence_intervals(ParameterEstimate(3.0, None, 5))

    def test_requires_two_obs(self):
        with pytest.raises(ValueError):
            confidence_intervals(ParameterEstimate(3.0, 1.0, 1))

    @given(st.integers(2, 500))
    @settings(max_examples=40, deadline=None)
    def test_width_shrinks_with_n_override(self, n):
        est = ParameterEstimate(3.0, 1.0, 5)
        base = confidence_intervals(est, 0.05)
        more = confidence_intervals(est, 0.05, n_override=5 * n)
        assert (more.mu[1] - more.mu[0]) <= (base.mu[1] - base.mu[0])

    def test_zero_sd_collapses(self):
        pair = confidence_intervals(ParameterEstimate(3.0, 0.0, 5))
        assert pair.mu == (3.0, 3.0)
        assert pair.sigma == (0.0, 0.0)

    def test_coverage_mu(self, rng):
        # nominal 95% coverage on continuous Gaussian data, small n
        n, reps, hits = 5, 800, 0
        for _ in range(reps):
            x = rng.normal(3.0, 1.0, n)
            est = ParameterEstimate(float(x.mean()),
                                    float(x.std(ddof=1)), n)
            lo, hi = confidence_intervals(est, 0.05).mu
            hits += lo <= 3.0 <= hi
        # binomial 4-sigma band around 0.95
        assert abs(hits / reps - 0.95) < 4 * np.sqrt(0.95 * 0.05 / reps)


class TestBorderline:
    def test_min_below_max(self, small_tensor):
        estimates = estimate_parameters(small_tensor)
        lo = build_borderline(estimates, 0.05, "min")
        hi = build_borderline(estimates, 0.05, "max")
        assert np.all(lo.ratings.mu <= hi.ratings.mu)
        assert np.all(lo.ratings.sigma <= hi.ratings.sigma)
        assert lo.case == "min" and hi.case == "max"

    def test_unknown_case_rejected(self, small_tensor):
        estimates = estimate_parameters(small_tensor)
        with pytest.raises(ValueError):
            build_borderline(estimates, 0.05, "median")

    def test_n_override_narrows_toward_estimates(self, small_tensor):
        estimates = estimate_parameters(small_tensor)
        wide = build_borderline(estimates, 0.05, "max")
        narrow = build_borderline(estimates, 0.05, "max", n_override=10**6)
        mu_hat = np.array([estimates[p].mean
                           for p in sorted(estimates)])
        gap_wide = np.abs(wide.ratings.mu - mu_hat)
        gap_narrow = np.abs(narrow.ratings.mu - mu_hat)
        assert np.all(gap_narrow <= gap_wide + 1e-12)

    def test_recommender_family(self, small_tensor):
        family = tensor_recommenders(small_tensor)
        assert [p.label for p in family] == \
            ["mean", "trial-1", "trial-2", "trial-3", "trial-4", "trial-5"]
        np.testing.assert_allclose(
            family[0].values,
            small_tensor.data.mean(axis=2).reshape(-1))


class TestStudies:
    def test_borderline_study_shape(self, small_tensor):
        study = simulate_borderline_rmse(small_tensor, trials=2000,
                                         seed=RandomSeed(2))
        assert set(case for case, _ in study.densities) == {"min", "max"}
        assert len(study.labels) == 6
        # max-case distributions sit to the right of min-case
        for label in study.labels:
            assert study.means[("max", label)] > study.means[("min", label)]

    def test_stationary_convergence_monotone(self, small_tensor):
        curve = convergence_to_stationary(small_tensor, [100, 1000, 10000],
                                          trials=20000, seed=RandomSeed(3))
        floors = [min(lo, hi) for _, lo, hi in curve]
        # 2x MC SE tolerance on an intersection estimate at this tau
        tol = 2.0 * np.sqrt(2.0 / 20000)
        assert all(b >= a - tol for a, b in zip(floors, floors[1:]))
        assert floors[-1] > floors[0]

    def test_error_probability_curves(self, small_tensor):
        curves = convergence_error_probability(small_tensor, [50, 500],
                                               trials=20000,
                                               seed=RandomSeed(4))
        for case in ("min", "max"):
            assert len(curves[case]) == 2
            for _, p in curves[case]:
                assert 0.0 <= p <= 1.0

    def test_error_probability_rejects_bad_pair(self, small_tensor):
        with pytest.raises(ValueError):
            convergence_error_probability(small_tensor, [50], pair=(1, 9))


class TestExponents:
    def test_mu_width_scales_half_power(self):
        slopes = ci_width_exponents(n_grid=[10, 100, 1000, 10000])
        assert slopes["mu"] == pytest.approx(-0.5, abs=0.02)
        assert slopes["sigma"] == pytest.approx(-0.5, abs=0.05)
