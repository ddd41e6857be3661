import numpy as np
import pytest

from beamdrift import (TRMeasurement, YieldImage, acquire_time_resolved,
                       aggregate, ar_params_from_spec, count_histogram,
                       generate_dose_field, make_truth)


def _small_dataset(n=50, seed=2):
    rng = np.random.default_rng(seed)
    truth = make_truth("gradient", 8, 6, 1.0, 5.0)
    ar = ar_params_from_spec(20.0, 0.1, 0.9)
    dose = generate_dose_field(ar, 8, 6, rng)
    return truth, dose, acquire_time_resolved(truth, dose, n, rng)


class TestTypes:
    def test_yield_image_validation(self):
        with pytest.raises(ValueError):
            YieldImage(np.array([1.0, 2.0]))  # not 2-D
        with pytest.raises(ValueError):
            YieldImage(np.array([[1.0, np.nan]]))
        img = YieldImage(np.array([[1.0, 2.0]]))
        assert (img.width, img.height) == (2, 1)
        assert img.raster().shape == (2,)

    def test_tr_validation(self):
        with pytest.raises(ValueError):
            TRMeasurement(counts=np.array([[0, -1]]), width=1, height=1)
        with pytest.raises(ValueError):
            TRMeasurement(counts=np.zeros((3, 4), dtype=int), width=2, height=2)
        tr = TRMeasurement(counts=np.zeros((4, 7), dtype=int), width=2, height=2)
        assert tr.n == 7


class TestAcquisition:
    def test_shapes_and_dtype(self):
        truth, dose, tr = _small_dataset()
        assert tr.counts.shape == (48, 50)
        assert np.issubdtype(tr.counts.dtype, np.integer)
        assert np.all(tr.counts >= 0)

    def test_aggregate_is_sum(self):
        _, _, tr = _small_dataset()
        agg = aggregate(tr)
        assert agg.totals.shape == (6, 8)
        assert np.array_equal(agg.raster(), tr.counts.sum(axis=1))

    def test_mean_counts(self):
        # E[Y_k] = eta * lam / n per sub-acquisition; cv=0 pins the dose
        # at exactly 30, and 48*48*4000 draws put 2% at 4.3 sigma
        rng = np.random.default_rng(4)
        truth = YieldImage(np.full((48, 48), 2.0))
        ar = ar_params_from_spec(30.0, 0.0, 0.5)
        dose = generate_dose_field(ar, 48, 48, rng)
        tr = acquire_time_resolved(truth, dose, 4000, rng)
        per_sub = tr.counts.mean()
        assert per_sub == pytest.approx(2.0 * 30.0 / 4000, rel=0.02)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(0)
        truth = make_truth("gradient", 8, 6, 1.0, 5.0)
        ar = ar_params_from_spec(20.0, 0.1, 0.9)
        dose = generate_dose_field(ar, 6, 8, rng)
        with pytest.raises(ValueError):
            acquire_time_resolved(truth, dose, 10, rng)

    def test_invalid_n(self):
        truth, dose, _ = _small_dataset()
        with pytest.raises(ValueError):
            acquire_time_resolved(truth, dose, 0, np.random.default_rng(0))


class TestHistogram:
    def test_multiplicities(self):
        counts = np.array([[0, 0, 2, 1, 2, 0]])
        tr = TRMeasurement(counts=counts, width=1, height=1)
        hist = count_histogram(tr, 0)
        assert hist == {0: 3, 1: 1, 2: 2}
        assert sum(hist.values()) == tr.n
