import numpy as np
import pytest

from beamdrift import (AggregatedMeasurement, ARParams, FilterNoiseParams,
                       MseTable, YieldImage, ar_params_from_spec,
                       build_mse_table, filter_step, ideal_filter_step,
                       run_filter_pass, select_sigma_eps, select_sigma_gamma)
from beamdrift.sequential_filter import _gain_terms

AR = ARParams(a=0.999, c=0.02, sigma_x_sq=0.032, lambda_nominal=20.0)


def _random_instances(count, seed, with_noise=True):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        a = rng.uniform(0.0, 0.9999)
        lam_nom = rng.uniform(1.0, 300.0)
        cv = rng.uniform(0.0, 0.5)
        ar = ar_params_from_spec(lam_nom, cv, a)
        eta = rng.uniform(0.0, 10.0)
        lam_prev = rng.uniform(0.1, 3.0) * lam_nom
        y = rng.uniform(0.0, 2.0) * max(eta * lam_prev, 1.0)
        if with_noise:
            noise = FilterNoiseParams(sigma_eps_sq=rng.uniform(0.0, 50.0),
                                      sigma_gamma_sq=rng.uniform(0.0, 2.0))
        else:
            noise = FilterNoiseParams(sigma_eps_sq=0.0, sigma_gamma_sq=0.0)
        yield y, eta, lam_prev, ar, noise


class TestFilterStep:
    def test_frozen_value(self):
        # independently computed by exact rational/decimal substitution of
        # the update terms at this instance
        noise = FilterNoiseParams(sigma_eps_sq=0.5, sigma_gamma_sq=0.05)
        est = filter_step(110.0, 5.0, 20.0, AR, noise)
        assert est == pytest.approx(20.041857101682535, rel=1e-12)

    def test_frozen_terms(self):
        cov, var_y, mean_y, prior = _gain_terms(5.0, 20.0, AR.a, AR.c,
                                                AR.sigma_x_sq, 0.5, 0.05)
        assert cov == pytest.approx(2.6550025, rel=1e-12)
        assert var_y == pytest.approx(634.301562525, rel=1e-12)
        assert mean_y == pytest.approx(100.0 * 0.999 + 5 * 0.02, rel=1e-12)
        assert prior == pytest.approx(0.999 * 20.0 + 0.02, rel=1e-12)

    def test_noise_free_reduction(self):
        """With zero estimate-error variances the noise-aware update must
        reproduce the known-parameter update exactly."""
        for y, eta, lam_prev, ar, noise in _random_instances(1000, 50,
                                                             with_noise=False):
            noisy = filter_step(y, eta, lam_prev, ar, noise)
            ideal = ideal_filter_step(y, eta, lam_prev, ar)
            assert noisy == pytest.approx(ideal, rel=1e-12)

    def test_zero_gain_collapse(self):
        """No process noise and no estimate uncertainty: the measurement
        carries no usable signal and the update is the pure prior."""
        rng = np.random.default_rng(51)
        for _ in range(200):
            a = rng.uniform(0.0, 0.9999)
            ar = ar_params_from_spec(rng.uniform(1.0, 100.0), 0.0, a)
            noise = FilterNoiseParams(sigma_eps_sq=0.0,
                                      sigma_gamma_sq=rng.uniform(0.0, 2.0))
            lam_prev = rng.uniform(0.5, 2.0) * ar.lambda_nominal
            eta = rng.uniform(0.0, 10.0)
            y = rng.uniform(0.0, 3.0) * max(eta * lam_prev, 1.0)
            est = filter_step(y, eta, lam_prev, ar, noise)
            assert est == pytest.approx(ar.a * lam_prev + ar.c, rel=1e-12)

    def test_zero_innovation_fixed_point(self):
        """A measurement equal to its prediction leaves the prior mean."""
        for y, eta, lam_prev, ar, noise in _random_instances(1000, 52):
            cov, var_y, mean_y, prior = _gain_terms(
                eta, lam_prev, ar.a, ar.c, ar.sigma_x_sq,
                noise.sigma_eps_sq, noise.sigma_gamma_sq)
            est = filter_step(mean_y, eta, lam_prev, ar, noise)
            assert est == pytest.approx(max(prior, 0.01 * ar.lambda_nominal),
                                        rel=1e-12)

    def test_correlation_bound(self):
        """cov^2 <= var(y) var(lam): the implied regression never
        overshoots the prior uncertainty."""
        for y, eta, lam_prev, ar, noise in _random_instances(1000, 53):
            cov, var_y, _, _ = _gain_terms(
                eta, lam_prev, ar.a, ar.c, ar.sigma_x_sq,
                noise.sigma_eps_sq, noise.sigma_gamma_sq)
            var_lam = ar.sigma_x_sq + ar.a ** 2 * noise.sigma_eps_sq
            assert cov * cov <= var_y * var_lam * (1 + 1e-12) + 1e-30

    def test_clamped_floor(self):
        noise = FilterNoiseParams(sigma_eps_sq=0.0, sigma_gamma_sq=0.0)
        ar = ar_params_from_spec(20.0, 0.2, 0.5)
        est = filter_step(0.0, 8.0, 0.2, ar, noise)
        assert est >= 0.01 * 20.0


class TestSigmaEps:
    def test_frozen_value(self):
        # the 1e-10 step-size stopping rule bounds agreement between
        # independent implementations only to ~1e-8 near the fixed point
        got = select_sigma_eps(AR, eta_bar=3.0, lambda_bar=20.0,
                               sigma_gamma_sq=0.05)
        assert got == pytest.approx(0.9203518544813007, rel=1e-7)

    def test_is_fixed_point(self):
        for ar, eta_bar, lam_bar, sg2 in [
                (AR, 3.0, 20.0, 0.05),
                (ar_params_from_spec(200.0, 0.2, 0.9999), 0.6, 200.0, 0.01),
                (ar_params_from_spec(20.0, 0.3, 0.9), 2.0, 18.0, 0.1)]:
            x = select_sigma_eps(ar, eta_bar, lam_bar, sg2)
            cov, var_y, _, _ = _gain_terms(eta_bar, lam_bar, ar.a, ar.c,
                                           ar.sigma_x_sq, x, sg2)
            fx = ar.sigma_x_sq + ar.a ** 2 * x - cov * cov / var_y
            assert fx == pytest.approx(x, rel=1e-6, abs=1e-12)

    def test_zero_yield_gives_stationary_variance(self):
        got = select_sigma_eps(AR, eta_bar=0.0, lambda_bar=20.0,
                               sigma_gamma_sq=0.05)
        assert got == pytest.approx(AR.sigma_x_sq / (1 - AR.a ** 2), rel=1e-12)

    def test_bounded_by_stationary_variance(self):
        # conditioning can only reduce uncertainty below the prior
        for a in (0.5, 0.9, 0.999, 0.9999):
            ar = ar_params_from_spec(20.0, 0.2, a)
            x = select_sigma_eps(ar, 3.0, 20.0, 0.05)
            assert 0.0 <= x <= ar.stationary_variance * (1 + 1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            select_sigma_eps(AR, -1.0, 20.0, 0.05)
        with pytest.raises(ValueError):
            select_sigma_eps(AR, 1.0, np.nan, 0.05)


class TestSigmaGamma:
    def _table(self):
        return MseTable(lam=np.array([10.0, 10.0, 20.0, 20.0]),
                        eta=np.array([1.0, 5.0, 1.0, 5.0]),
                        mse=np.array([0.11, 0.52, 0.06, 0.27]),
                        se=np.array([0.01, 0.01, 0.01, 0.01]),
                        n=200, trials=1000, seed=0)

    def test_exact_hit(self):
        assert select_sigma_gamma(20.0, 5.0, self._table()) == 0.27

    def test_nearest_cell(self):
        assert select_sigma_gamma(19.0, 4.2, self._table()) == 0.27
        assert select_sigma_gamma(11.0, 1.3, self._table()) == 0.11

    def test_tie_breaks_toward_smaller_eta(self):
        # equidistant between the two eta rows at lam 20
        assert select_sigma_gamma(20.0, 3.0, self._table()) == 0.06

    def test_tie_breaks_toward_smaller_lam(self):
        table = MseTable(lam=np.array([10.0, 20.0]), eta=np.array([2.0, 2.0]),
                         mse=np.array([0.4, 0.2]), se=np.array([0.01, 0.01]),
                         n=100, trials=1000, seed=0)
        assert select_sigma_gamma(15.0, 2.0, table) == 0.4


class TestBuildTable:
    def test_requires_enough_trials(self):
        with pytest.raises(ValueError):
            build_mse_table([10.0], [1.0], n=10, trials=500, seed=0)

    def test_shape_and_determinism(self):
        t1 = build_mse_table([10.0, 20.0], [1.0, 2.0], n=20, trials=1000, seed=5)
        t2 = build_mse_table([10.0, 20.0], [1.0, 2.0], n=20, trials=1000, seed=5)
        assert len(t1.lam) == 4
        assert np.array_equal(t1.mse, t2.mse)
        assert np.all(t1.mse > 0) and np.all(t1.se > 0)

    def test_mse_shrinks_with_dose(self):
        t = build_mse_table([5.0, 80.0], [2.0], n=20, trials=2000, seed=6)
        low = t.mse[np.argmin(t.lam)]
        high = t.mse[np.argmax(t.lam)]
        assert high < low


class TestFilterPass:
    def _setup(self):
        totals = np.array([[100, 104, 96], [98, 101, 99]])
        agg = AggregatedMeasurement(totals=totals)
        eta = YieldImage(np.full((2, 3), 5.0))
        noise = FilterNoiseParams(sigma_eps_sq=0.5, sigma_gamma_sq=0.05)
        return agg, eta, noise

    def test_forward_is_chained_steps(self):
        agg, eta, noise = self._setup()
        out = run_filter_pass(agg, eta, AR, noise, "forward")
        prev = AR.lambda_nominal
        for p, y in enumerate(agg.raster()):
            prev = filter_step(float(y), 5.0, prev, AR, noise)
            assert out[p] == prev

    def test_backward_reverses_order(self):
        agg, eta, noise = self._setup()
        fwd_on_reversed = run_filter_pass(
            AggregatedMeasurement(totals=agg.raster()[::-1].reshape(1, 6)),
            YieldImage(np.full((1, 6), 5.0)), AR, noise, "forward")
        bwd = run_filter_pass(agg, eta, AR, noise, "backward")
        assert np.allclose(bwd, fwd_on_reversed[::-1], rtol=1e-14)

    def test_custom_init(self):
        agg, eta, noise = self._setup()
        a = run_filter_pass(agg, eta, AR, noise, "forward", init=12.0)
        b = run_filter_pass(agg, eta, AR, noise, "forward", init=AR.lambda_nominal)
        assert a[0] != b[0]

    def test_direction_validated(self):
        agg, eta, noise = self._setup()
        with pytest.raises(ValueError):
            run_filter_pass(agg, eta, AR, noise, "sideways")
