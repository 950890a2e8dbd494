import numpy as np
import pytest

from core.ensemble import uniform_average
from core.frames import PredictionMatrix
from core.metafeatures import META_COLUMNS, augment, feature_type, row_statistics
from errors.exceptions import SelectionError


def _pool(rows):
    rows = np.asarray(rows, dtype=float)
    return PredictionMatrix(tuple(f"m{k}" for k in range(rows.shape[1])), rows)


class TestRowStatistics:
    def test_constant_row(self):
        stats = row_statistics(np.array([[5.0, 5.0, 5.0]]))
        assert stats["mean"][0] == 5.0 and stats["median"][0] == 5.0
        assert stats["std"][0] == 0.0 and stats["range"][0] == 0.0
        assert stats["mean_std_interaction"][0] == 0.0

    def test_hand_row(self):
        stats = row_statistics(np.array([[1.0, 2.0, 3.0]]))
        assert stats["mean"][0] == 2.0
        assert stats["std"][0] == pytest.approx(np.sqrt(2 / 3))
        assert stats["median"][0] == 2.0
        assert stats["range"][0] == 2.0
        assert stats["mean_std_interaction"][0] == pytest.approx(2 * np.sqrt(2 / 3))
        assert stats["range_std_interaction"][0] == pytest.approx(2 * np.sqrt(2 / 3))

    def test_even_median_is_midpoint(self):
        assert row_statistics(np.array([[1.0, 4.0, 2.0, 10.0]]))["median"][0] == 3.0

    def test_zero_spread_iff_zero_range(self, rng):
        values = rng.standard_normal((30, 4))
        values[::3] = 7.0
        stats = row_statistics(values)
        np.testing.assert_array_equal(stats["std"] == 0.0, stats["range"] == 0.0)


class TestAugment:
    def test_layout(self, rng):
        design = augment(_pool(rng.standard_normal((10, 3))))
        assert design.width == 3 + 6
        assert design.column_names == ("m0", "m1", "m2") + META_COLUMNS
        assert design.n_base == 3

    def test_width_for_large_pool(self, rng):
        assert augment(_pool(rng.standard_normal((5, 37)))).width == 43

    def test_mean_column_is_uniform_average(self, rng):
        pool = _pool(rng.standard_normal((25, 4)))
        np.testing.assert_allclose(augment(pool).column("mean"), uniform_average(pool))

    def test_single_model_has_dead_spread_columns(self, rng):
        design = augment(_pool(rng.standard_normal((8, 1))))
        assert np.all(design.column("std") == 0.0)
        assert np.all(design.column("range") == 0.0)
        assert np.all(design.column("range_std_interaction") == 0.0)

    def test_blocks_can_be_switched_off(self, rng):
        pool = _pool(rng.standard_normal((6, 2)))
        assert augment(pool, include_stats=False, include_interactions=False).width == 2
        assert augment(pool, include_interactions=False).width == 6
        assert augment(pool, include_stats=False).column_names[-2:] == ("mean_std_interaction", "range_std_interaction")

    def test_empty_selection(self):
        with pytest.raises(SelectionError):
            augment(PredictionMatrix((), np.zeros((3, 0))))

    def test_name_collision(self, rng):
        pool = PredictionMatrix(("mean", "other"), rng.standard_normal((4, 2)))
        with pytest.raises(SelectionError):
            augment(pool)

    def test_feature_types(self):
        assert feature_type("xgb") == "base"
        assert feature_type("median") == "statistical"
        assert feature_type("range_std_interaction") == "interaction"
