import numpy as np
import pytest

from core.frames import PredictionMatrix, TargetVector
from core.metrics import MetricReport, mae, pearson, r_squared, rmse
from errors.exceptions import DegenerateInputError, DegenerateTargetError, DimensionError, InputError


class TestRmse:
    def test_identity(self):
        assert rmse([1, 2, 3], [1, 2, 3]) == 0.0

    def test_constant_shift(self):
        t = np.array([0.5, -1.0, 3.0, 7.0])
        assert rmse(t + 2.5, t) == pytest.approx(2.5)

    def test_hand_value(self):
        assert rmse([0, 0], [3, 4]) == pytest.approx(np.sqrt(12.5))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            rmse([1, 2], [1, 2, 3])

    def test_non_finite(self):
        with pytest.raises(InputError):
            rmse([1, np.nan], [1, 2])


class TestMae:
    def test_identity(self):
        assert mae([4, 5], [4, 5]) == 0.0

    def test_hand_value(self):
        assert mae([0, 0], [3, 4]) == pytest.approx(3.5)

    def test_shift(self):
        assert mae(np.arange(5) - 1.5, np.arange(5)) == pytest.approx(1.5)


class TestRSquared:
    def test_perfect(self):
        assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0

    def test_mean_prediction(self):
        t = np.array([1.0, 2.0, 6.0])
        assert r_squared(np.full(3, t.mean()), t) == pytest.approx(0.0)

    def test_hand_value(self):
        assert r_squared([1, 2, 2, 4], [1, 2, 3, 4]) == pytest.approx(0.8)

    def test_can_be_negative(self):
        assert r_squared([4, 3, 2, 1], [1, 2, 3, 4]) < 0

    def test_constant_target(self):
        with pytest.raises(DegenerateTargetError):
            r_squared([1, 2], [3, 3])


class TestPearson:
    def test_self(self):
        a = np.array([1.0, 3.0, 2.0, 5.0])
        assert pearson(a, a) == pytest.approx(1.0)

    def test_negated(self):
        a = np.array([1.0, 3.0, 2.0, 5.0])
        assert pearson(a, -a) == pytest.approx(-1.0)

    def test_constant(self):
        with pytest.raises(DegenerateInputError):
            pearson([2, 2, 2], [1, 2, 3])

    def test_bounded(self, rng):
        for _ in range(20):
            a, b = rng.standard_normal((2, 30))
            assert -1.0 <= pearson(a, b) <= 1.0


class TestInvariants:
    @staticmethod
    def _pair(seed: int, n: int = 64):
        rng = np.random.default_rng(seed)
        target = rng.standard_normal(n) * 3.0 + 1.0
        pred = target + rng.standard_normal(n)
        return pred, target

    def test_pearson_worked_example(self):
        assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("scale, shift", [(2.0, 0.0), (0.01, -7.0), (1e4, 3.5)])
    def test_pearson_affine_invariance(self, seed, scale, shift):
        a, b = self._pair(seed)
        base = pearson(a, b)
        assert pearson(scale * a + shift, b) == pytest.approx(base, abs=1e-12)
        assert pearson(a, scale * b + shift) == pytest.approx(base, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_r_squared_matches_rmse(self, seed):
        pred, target = self._pair(seed)
        sst = float(np.sum((target - target.mean()) ** 2))
        expected = 1.0 - rmse(pred, target) ** 2 * len(target) / sst
        assert abs(r_squared(pred, target) - expected) < 1e-10

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("metric", [rmse, mae, r_squared, pearson])
    def test_joint_permutation(self, seed, metric):
        pred, target = self._pair(seed)
        perm = np.random.default_rng(seed + 100).permutation(len(target))
        assert metric(pred[perm], target[perm]) == pytest.approx(metric(pred, target), rel=1e-12, abs=1e-15)


class TestMetricReport:
    def test_zero_error_identities(self):
        t = np.array([1.0, 2.0, 4.0])
        rep = MetricReport.evaluate(t, t)
        assert rep.rmse == 0.0 and rep.mae == 0.0 and rep.r_squared == 1.0

    def test_constant_prediction_has_no_correlation(self):
        rep = MetricReport.evaluate([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
        assert rep.pearson is None
        assert rep.to_dict()["rmse"] == pytest.approx(np.sqrt(14 / 3))


class TestFrames:
    def test_target_needs_two_samples(self):
        with pytest.raises(InputError):
            TargetVector([1.0])

    def test_target_is_read_only(self):
        t = TargetVector([1.0, 2.0])
        with pytest.raises(ValueError):
            t.values[0] = 5.0

    def test_duplicate_names(self):
        with pytest.raises(InputError):
            PredictionMatrix(("a", "a"), np.zeros((3, 2)))

    def test_column_count(self):
        with pytest.raises(DimensionError):
            PredictionMatrix(("a",), np.zeros((3, 2)))

    def test_non_finite_entries(self):
        with pytest.raises(InputError):
            PredictionMatrix(("a",), np.array([[1.0], [np.inf]]))

    def test_select_and_rows(self):
        m = PredictionMatrix.from_columns({"a": [1, 2, 3], "b": [4, 5, 6]})
        assert m.select(["b"]).names == ("b",)
        np.testing.assert_array_equal(m.take_rows(np.array([2, 0])).column("a"), [3, 1])
        assert "a" in m and "z" not in m
        assert list(m.to_frame().columns) == ["a", "b"]

    def test_from_columns_length_mismatch(self):
        with pytest.raises(DimensionError):
            PredictionMatrix.from_columns({"a": [1, 2], "b": [1, 2, 3]})
