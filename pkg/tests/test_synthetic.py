import numpy as np
import pytest

from beamdrift import TRUTH_KINDS, make_truth


class TestMakeTruth:
    @pytest.mark.parametrize("kind", TRUTH_KINDS)
    def test_range_attained(self, kind):
        rng = np.random.default_rng(90)
        img = make_truth(kind, 32, 24, 1.0, 5.0, rng)
        assert img.values.shape == (24, 32)
        assert img.values.min() == pytest.approx(1.0)
        assert img.values.max() == pytest.approx(5.0)

    def test_deterministic_kinds_ignore_rng(self):
        a = make_truth("gradient", 16, 16, 0.2, 1.0)
        b = make_truth("gradient", 16, 16, 0.2, 1.0, np.random.default_rng(1))
        assert np.array_equal(a.values, b.values)

    def test_blobs_needs_rng(self):
        with pytest.raises(ValueError):
            make_truth("blobs", 16, 16, 1.0, 5.0)

    def test_blobs_seeded(self):
        a = make_truth("blobs", 16, 16, 1.0, 5.0, np.random.default_rng(2))
        b = make_truth("blobs", 16, 16, 1.0, 5.0, np.random.default_rng(2))
        c = make_truth("blobs", 16, 16, 1.0, 5.0, np.random.default_rng(3))
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_checkerboard_has_two_levels(self):
        img = make_truth("checkerboard", 32, 32, 1.0, 5.0)
        assert set(np.unique(img.values)) == {1.0, 5.0}

    def test_validation(self):
        with pytest.raises(ValueError):
            make_truth("gradient", 16, 16, 5.0, 1.0)
        with pytest.raises(ValueError):
            make_truth("gradient", 0, 16, 1.0, 5.0)
        with pytest.raises(ValueError):
            make_truth("plaid", 16, 16, 1.0, 5.0)
