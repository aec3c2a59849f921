import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rateblur.statmath import (
    GaussianParams,
    NakagamiParams,
    RandomSeed,
    cdf_chi2,
    cdf_t,
    gaussian_cdf,
    gaussian_pdf,
    gaussian_quantile,
    nakagami_cdf,
    nakagami_mean_var,
    nakagami_pdf,
    quantile_chi2,
    quantile_t,
    sample_gaussian,
    stream_generator,
)

# independently computed reference quantiles (mpmath, 30 digits)
T_975_4 = 2.7764451051977944
T_975_1 = 12.706204736174705
CHI2_975_4 = 11.143286781877797
CHI2_025_4 = 0.48441855708792981
CHI2_975_1 = 5.023886187314889
CHI2_025_1 = 0.00098206911717525591
CHI2_MEDIAN_10 = 9.3418177655919674
Z_975 = 1.9599639845400542
Z_75 = 0.674489750196

# mean = Gamma((n+1)/2)/Gamma(n/2) sqrt(2/n), var = 1 - mean^2
NAKAGAMI_MOMENTS = {
    1: (0.79788456080286536, 0.36338022763241866),
    2: (0.88622692545275801, 0.21460183660255169),
    5: (0.95153286194814459, 0.094585212632773201),
    25: (0.99005246884091047, 0.019796108942017999),
    100: (0.99750316395510509, 0.0049874378995547391),
}


class TestQuantiles:
    @pytest.mark.parametrize("p,k,expected", [
        (0.975, 4, T_975_4),
        (0.975, 1, T_975_1),
    ])
    def test_t_oracle(self, p, k, expected):
        assert quantile_t(p, k) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("p,k,expected", [
        (0.975, 4, CHI2_975_4),
        (0.025, 4, CHI2_025_4),
        (0.975, 1, CHI2_975_1),
        (0.025, 1, CHI2_025_1),
        (0.5, 10, CHI2_MEDIAN_10),
    ])
    def test_chi2_oracle(self, p, k, expected):
        assert quantile_chi2(p, k) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("p,expected", [
        (0.975, Z_975),
        (0.75, Z_75),
    ])
    def test_gaussian_oracle(self, p, expected):
        q = gaussian_quantile(GaussianParams(0.0, 1.0), p)
        assert q == pytest.approx(expected, abs=1e-10)

    @given(st.floats(0.001, 0.999), st.integers(1, 200))
    @settings(max_examples=50, deadline=None)
    def test_t_roundtrip(self, p, k):
        assert cdf_t(quantile_t(p, k), k) == pytest.approx(p, abs=1e-9)

    @given(st.floats(0.001, 0.999), st.integers(1, 200))
    @settings(max_examples=50, deadline=None)
    def test_chi2_roundtrip(self, p, k):
        assert cdf_chi2(quantile_chi2(p, k), k) == pytest.approx(p, abs=1e-9)

    def test_rejects_boundary_levels(self):
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                quantile_t(bad, 5)
            with pytest.raises(ValueError):
                gaussian_quantile(GaussianParams(0, 1), bad)

    def test_vectorized(self):
        out = quantile_t(np.array([0.975, 0.975]), 4)
        np.testing.assert_allclose(out, T_975_4)


class TestGaussianDensity:
    def test_pdf_integrates_to_one(self):
        params = GaussianParams(2.0, 0.7)
        x = np.linspace(-8, 12, 20001)
        mass = np.trapezoid(gaussian_pdf(params, x), x)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_cdf_point_mass(self):
        params = GaussianParams(3.0, 0.0)
        assert gaussian_cdf(params, 2.999) == 0.0
        assert gaussian_cdf(params, 3.0) == 1.0

    def test_pdf_rejects_point_mass(self):
        with pytest.raises(ValueError):
            gaussian_pdf(GaussianParams(0.0, 0.0), 0.0)


class TestNakagami:
    @pytest.mark.parametrize("n", sorted(NAKAGAMI_MOMENTS))
    def test_moment_oracle(self, n):
        mean, var = nakagami_mean_var(n)
        e_mean, e_var = NAKAGAMI_MOMENTS[n]
        assert mean == pytest.approx(e_mean, rel=1e-12)
        assert var == pytest.approx(e_var, rel=1e-10)

    def test_large_n_stable(self):
        # naive Gamma-ratio overflows near n ~ 350; log-gamma must not
        mean, var = nakagami_mean_var(10**6)
        assert 0.999999 < mean < 1.0
        assert var > 0

    def test_pdf_integrates_to_one(self):
        params = NakagamiParams(2.5, 1.0)
        x = np.linspace(0, 8, 40001)
        mass = np.trapezoid(nakagami_pdf(params, x), x)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_cdf_matches_pdf_integral(self):
        params = NakagamiParams(0.5, 1.0)  # half-normal edge case
        x = np.linspace(0, 3, 30001)
        pdf_mass = np.trapezoid(nakagami_pdf(params, x), x)
        assert nakagami_cdf(params, 3.0) == pytest.approx(pdf_mass, abs=1e-6)

    def test_negative_support_is_zero(self):
        params = NakagamiParams(1.0, 1.0)
        assert nakagami_pdf(params, -0.5) == 0.0
        assert nakagami_cdf(params, -0.5) == 0.0


class TestStreams:
    def test_same_path_same_draws(self):
        g1 = stream_generator(RandomSeed(3, 1), 2, 0, 5)
        g2 = stream_generator(RandomSeed(3, 1), 2, 0, 5)
        np.testing.assert_array_equal(g1.standard_normal(16),
                                      g2.standard_normal(16))

    @pytest.mark.parametrize("other", [
        RandomSeed(4, 1), RandomSeed(3, 2),
    ])
    def test_different_seed_differs(self, other):
        a = stream_generator(RandomSeed(3, 1), 2).standard_normal(16)
        b = stream_generator(other, 2).standard_normal(16)
        assert not np.array_equal(a, b)

    def test_different_path_differs(self):
        a = stream_generator(RandomSeed(3), 1, 0).standard_normal(16)
        b = stream_generator(RandomSeed(3), 1, 1).standard_normal(16)
        assert not np.array_equal(a, b)

    def test_sample_gaussian_reproducible(self):
        params = GaussianParams(2.0, 0.5)
        a = sample_gaussian(params, 100, RandomSeed(11))
        b = sample_gaussian(params, 100, RandomSeed(11))
        np.testing.assert_array_equal(a, b)

    def test_sample_gaussian_point_mass(self):
        out = sample_gaussian(GaussianParams(4.0, 0.0), 10, RandomSeed(0))
        np.testing.assert_array_equal(out, np.full(10, 4.0))

    def test_seed_requires_nonnegative(self):
        with pytest.raises(ValueError):
            RandomSeed(-1)
