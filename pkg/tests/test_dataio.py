import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rateblur.dataio import (
    DEFAULT_PROFILE,
    CalibrationProfile,
    RatingScale,
    RatingTensor,
    estimate_ks_power,
    estimate_parameters,
    load_tensor,
    save_tensor,
    synthesize_tensor,
    validate_tensor,
)
from rateblur.errors import DataFormatError
from rateblur.statmath import RandomSeed


class TestScale:
    def test_snap_rounds_and_clips(self):
        scale = RatingScale(1.0, 5.0, 1.0)
        np.testing.assert_array_equal(
            scale.snap(np.array([0.2, 2.4, 2.6, 7.0])),
            np.array([1.0, 2.0, 3.0, 5.0]))

    @given(st.floats(-10, 10))
    @settings(max_examples=50, deadline=None)
    def test_snap_idempotent(self, x):
        scale = RatingScale(1.0, 5.0, 1.0)
        once = scale.snap(np.array([x]))
        np.testing.assert_array_equal(scale.snap(once), once)


class TestRoundtrip:
    def test_save_load_identity(self, small_tensor, tmp_path):
        path = tmp_path / "t.csv"
        save_tensor(small_tensor, path)
        back = load_tensor(path)
        assert back.users == small_tensor.users
        assert back.items == small_tensor.items
        np.testing.assert_array_equal(back.data, small_tensor.data)

    def test_header_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("user,item,rating\n")
        with pytest.raises(DataFormatError, match="line 1"):
            load_tensor(path)

    def test_duplicate_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("user,item,trial,rating\n"
                        "1,1,1,3.0\n1,1,1,4.0\n")
        with pytest.raises(DataFormatError, match="line 3.*duplicate"):
            load_tensor(path)

    def test_incomplete_itemized(self, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text("user,item,trial,rating\n"
                        "1,1,1,3.0\n1,1,2,4.0\n2,1,1,2.0\n")
        with pytest.raises(DataFormatError,
                           match=r"\(user=2, item=1, trial=2\)"):
            load_tensor(path)

    def test_nonnumeric_rating(self, tmp_path):
        path = tmp_path / "nan.csv"
        path.write_text("user,item,trial,rating\n1,1,1,abc\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_tensor(path)


class TestEstimates:
    def test_mean_and_bessel_sd(self):
        data = np.array([[[1.0, 2.0, 3.0]]])
        tensor = RatingTensor((1,), (1,), data, RatingScale())
        est = estimate_parameters(tensor)[(1, 1)]
        assert est.mean == pytest.approx(2.0)
        assert est.sd == pytest.approx(1.0)  # ddof=1
        assert est.n_obs == 3

    def test_single_trial_no_sd(self):
        tensor = RatingTensor((1,), (1,), np.array([[[4.0]]]), RatingScale())
        est = estimate_parameters(tensor)[(1, 1)]
        assert est.sd is None


class TestProfile:
    def test_roundtrip_json(self, tmp_path):
        path = tmp_path / "p.json"
        DEFAULT_PROFILE.to_file(path)
        back = CalibrationProfile.from_file(path)
        assert back == DEFAULT_PROFILE

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        payload = DEFAULT_PROFILE.to_dict()
        payload["bogus"] = 1
        path.write_text(json.dumps(payload))
        with pytest.raises(DataFormatError, match="bogus"):
            CalibrationProfile.from_file(path)

    def test_validation(self):
        with pytest.raises(ValueError):
            CalibrationProfile(noisy_fractions=(1.5,))
        with pytest.raises(ValueError):
            CalibrationProfile(sigma_range=(0.5, 0.1))


class TestSynthesis:
    def test_reproducible(self):
        a = synthesize_tensor(DEFAULT_PROFILE, users=12, seed=RandomSeed(5))
        b = synthesize_tensor(DEFAULT_PROFILE, users=12, seed=RandomSeed(5))
        np.testing.assert_array_equal(a.data, b.data)

    def test_seed_changes_data(self):
        a = synthesize_tensor(DEFAULT_PROFILE, users=12, seed=RandomSeed(5))
        b = synthesize_tensor(DEFAULT_PROFILE, users=12, seed=RandomSeed(6))
        assert not np.array_equal(a.data, b.data)

    def test_realized_noisy_fractions(self, default_tensor):
        # designation is exact: round(frac * users) noisy slices per item
        sds = default_tensor.data.std(axis=2, ddof=1)
        users = len(default_tensor.users)
        for i, frac in enumerate(DEFAULT_PROFILE.noisy_fractions):
            assert int((sds[:, i] > 0).sum()) == round(frac * users)

    def test_values_on_scale(self, default_tensor):
        scale = DEFAULT_PROFILE.scale
        vals = np.unique(default_tensor.data)
        assert vals.min() >= scale.lo and vals.max() <= scale.hi
        steps = (vals - scale.lo) / scale.step
        np.testing.assert_allclose(steps, np.round(steps), atol=1e-12)

    def test_latent_shapes(self):
        tensor, latent = synthesize_tensor(DEFAULT_PROFILE, users=6,
                                           seed=RandomSeed(1),
                                           return_latent=True)
        assert latent["mu"].shape == tensor.data.shape[:2]
        assert latent["sigma"].shape == tensor.data.shape[:2]
        # quiet slices carry sigma 0
        sds = tensor.data.std(axis=2, ddof=1)
        assert np.all((latent["sigma"] == 0) == (sds == 0))

    def test_rejects_bad_users(self):
        with pytest.raises(ValueError):
            synthesize_tensor(DEFAULT_PROFILE, users=0, seed=RandomSeed(0))


class TestValidation:
    def test_fitted_mode_flags_caveat(self, default_tensor):
        report = validate_tensor(default_tensor)
        assert report.fitted_params_caveat
        assert report.n_noisy == report.ks_tested
        assert report.n_slices == 67 * 5

    def test_reference_mode(self, tmp_path):
        tensor, latent = synthesize_tensor(DEFAULT_PROFILE, users=20,
                                           seed=RandomSeed(3),
                                           return_latent=True)
        reference = {}
        for ui, u in enumerate(tensor.users):
            for ii, i in enumerate(tensor.items):
                reference[(u, i)] = (latent["mu"][ui, ii],
                                     latent["sigma"][ui, ii])
        report = validate_tensor(tensor, reference=reference)
        assert not report.fitted_params_caveat

    def test_cohort_consistency_on_synthetic(self, default_tensor):
        # trials are exchangeable by construction; the battery must agree
        report = validate_tensor(default_tensor, alpha=0.01)
        assert report.cohorts_consistent

    def test_ks_power_near_alpha_at_few_trials(self):
        # the certification caveat, quantified: at 5 observations even a
        # uniform rater rarely rejects
        power = estimate_ks_power(5, 0.05, RandomSeed(0), reps=400)
        assert power < 0.2

    def test_rejects_single_trial(self):
        tensor = RatingTensor((1,), (1,), np.array([[[4.0]]]), RatingScale())
        with pytest.raises(DataFormatError):
            validate_tensor(tensor)
