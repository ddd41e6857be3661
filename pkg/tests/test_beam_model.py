import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamdrift import ARParams, ar_params_from_spec, generate_dose_field
from beamdrift.beam_model import CLAMP_FRACTION, prior_step_moments


class TestARParams:
    def test_spec_conversion(self):
        p = ar_params_from_spec(20.0, 0.2, 0.999)
        assert p.c == pytest.approx(20.0 * (1 - 0.999), rel=1e-12)
        assert p.sigma_x_sq == pytest.approx((0.2 * 20.0) ** 2 * (1 - 0.999 ** 2),
                                             rel=1e-12)

    def test_stationary_moments(self):
        p = ar_params_from_spec(20.0, 0.2, 0.999)
        # the innovation variance is chosen to land the stationary spread
        # exactly at cv * nominal
        assert p.stationary_std == pytest.approx(0.2 * 20.0, rel=1e-12)
        assert p.stationary_variance == pytest.approx(16.0, rel=1e-12)

    def test_rejects_unstable(self):
        with pytest.raises(ValueError):
            ar_params_from_spec(20.0, 0.2, 1.0)
        with pytest.raises(ValueError):
            ar_params_from_spec(20.0, 0.2, -0.1)
        with pytest.raises(ValueError):
            ar_params_from_spec(0.0, 0.2, 0.5)

    def test_rejects_inconsistent_offset(self):
        with pytest.raises(ValueError):
            ARParams(a=0.9, c=5.0, sigma_x_sq=1.0, lambda_nominal=20.0)

    def test_prior_step(self):
        p = ar_params_from_spec(20.0, 0.2, 0.9)
        mean, var = prior_step_moments(30.0, p)
        assert mean == pytest.approx(0.9 * 30.0 + p.c, rel=1e-12)
        assert var == p.sigma_x_sq


class TestDoseField:
    def test_constant_when_cv_zero(self):
        p = ar_params_from_spec(20.0, 0.0, 0.999)
        rng = np.random.default_rng(3)
        field = generate_dose_field(p, 8, 4, rng)
        assert field.values.shape == (32,)
        assert np.all(field.values == 20.0)

    def test_matches_explicit_recursion(self):
        """The vectorized recursion must agree with the definition,
        run step by step, on identical innovations."""
        p = ar_params_from_spec(20.0, 0.2, 0.95)
        seed = 77
        field = generate_dose_field(p, 16, 8, np.random.default_rng(seed))

        rng = np.random.default_rng(seed)
        lam0 = rng.normal(p.lambda_nominal, p.stationary_std)
        x = rng.normal(0.0, np.sqrt(p.sigma_x_sq), 16 * 8 - 1)
        expect = np.empty(16 * 8)
        expect[0] = lam0
        for i in range(1, 16 * 8):
            expect[i] = x[i - 1] + p.a * expect[i - 1] + p.c
        expect = np.maximum(expect, CLAMP_FRACTION * p.lambda_nominal)
        assert np.allclose(field.values, expect, rtol=1e-12, atol=1e-12)

    def test_clamp_floor(self):
        p = ar_params_from_spec(5.0, 2.0, 0.5)  # huge spread, hits the floor
        rng = np.random.default_rng(1)
        field = generate_dose_field(p, 64, 64, rng)
        assert field.values.min() >= CLAMP_FRACTION * 5.0
        assert np.all(field.values > 0)

    def test_stationary_statistics(self):
        p = ar_params_from_spec(50.0, 0.1, 0.9)
        rng = np.random.default_rng(5)
        field = generate_dose_field(p, 512, 512, rng)
        assert field.values.mean() == pytest.approx(50.0, rel=0.02)
        assert field.values.std() == pytest.approx(5.0, rel=0.05)

    def test_lag_one_autocorrelation(self):
        p = ar_params_from_spec(50.0, 0.1, 0.8)
        rng = np.random.default_rng(9)
        v = generate_dose_field(p, 512, 512, rng).values
        d = v - v.mean()
        rho = (d[1:] * d[:-1]).mean() / d.var()
        assert rho == pytest.approx(0.8, abs=0.02)

    @given(st.floats(min_value=0.0, max_value=0.999),
           st.floats(min_value=0.01, max_value=0.5))
    @settings(max_examples=50, deadline=None)
    def test_field_always_positive(self, a, cv):
        p = ar_params_from_spec(10.0, cv, a)
        field = generate_dose_field(p, 16, 16, np.random.default_rng(0))
        assert np.all(field.values > 0)
        assert np.all(np.isfinite(field.values))
