import numpy as np
import pytest

from core.folds import FoldAssignment, build_oof, kfold_partition, stratified_partition, stratified_subsample
from core.metrics import rmse
from core.predictors import BasePredictor, ConstantPredictor, MeanPredictor, default_predictors
from errors.exceptions import PartitionError, PredictorError


class CountingPredictor(BasePredictor):
    calls = 0

    def __init__(self, name: str = "counting"):
        self.name = name

    def fit(self, features, targets, seed=None):
        type(self).calls += 1
        return self

    def predict(self, features):
        return np.zeros(len(features))


class BrokenPredictor(BasePredictor):
    name = "broken"

    def fit(self, features, targets, seed=None):
        raise RuntimeError("boom")

    def predict(self, features):
        return np.zeros(len(features))


class TestStratifiedPartition:
    def test_single_bin_even_sizes(self):
        folds = stratified_partition(np.arange(10.0), n_folds=5, n_bins=1, seed=0)
        assert folds.sizes().tolist() == [2, 2, 2, 2, 2]

    def test_one_row_per_decile_per_fold(self, rng):
        y = rng.standard_normal(100)
        folds = stratified_partition(y, n_folds=10, n_bins=10, seed=3)
        bin_of = np.empty(100, dtype=int)
        bin_of[np.argsort(y, kind="stable")] = np.arange(100) * 10 // 100
        counts = np.zeros((10, 10), dtype=int)
        np.add.at(counts, (folds.fold_of, bin_of), 1)
        assert np.all(counts == 1)

    def test_sizes_differ_by_at_most_one(self, rng):
        for n in (23, 57, 101):
            sizes = stratified_partition(rng.standard_normal(n), n_folds=7, seed=1).sizes()
            assert sizes.max() - sizes.min() <= 1
            assert sizes.sum() == n

    def test_too_few_samples(self):
        with pytest.raises(PartitionError):
            stratified_partition(np.arange(4.0), n_folds=5)

    def test_deterministic_in_seed(self, rng):
        y = rng.standard_normal(200)
        a = stratified_partition(y, 10, seed=42)
        b = stratified_partition(y, 10, seed=42)
        c = stratified_partition(y, 10, seed=43)
        np.testing.assert_array_equal(a.fold_of, b.fold_of)
        assert not np.array_equal(a.fold_of, c.fold_of)

    def test_split_partitions_rows(self, rng):
        folds = stratified_partition(rng.standard_normal(50), 5, seed=0)
        seen = np.concatenate([val for _, _, val in folds.splits()])
        assert sorted(seen.tolist()) == list(range(50))
        train, val = folds.split(2)
        assert np.intersect1d(train, val).size == 0

    def test_empty_fold_rejected(self):
        with pytest.raises(PartitionError):
            FoldAssignment(np.array([0, 0, 1, 1]), 3)


class TestKfold:
    def test_sizes(self):
        folds = kfold_partition(11, 3, seed=5)
        assert sorted(folds.sizes().tolist()) == [3, 4, 4]


class TestBuildOof:
    def _features(self, rng, n=60):
        X = rng.standard_normal((n, 3))
        y = X @ np.array([1.0, -0.5, 0.25]) + 0.3 * rng.standard_normal(n)
        return X, y

    def test_fit_count(self, rng):
        X, y = self._features(rng)
        folds = stratified_partition(y, 5, seed=0)
        CountingPredictor.calls = 0
        bundle = build_oof(X, y, [CountingPredictor("a"), CountingPredictor("b")], folds)
        assert CountingPredictor.calls == 10
        assert bundle.fit_calls == 10

    def test_fit_count_with_test(self, rng):
        X, y = self._features(rng)
        folds = stratified_partition(y, 5, seed=0)
        CountingPredictor.calls = 0
        bundle = build_oof(X, y, [CountingPredictor("a"), CountingPredictor("b")], folds, test_features=X[:7])
        assert CountingPredictor.calls == 12
        assert bundle.test.n_rows == 7

    def test_mean_predictor_uses_outside_rows(self, rng):
        X, y = self._features(rng)
        folds = stratified_partition(y, 5, seed=0)
        oof = build_oof(X, y, [MeanPredictor()], folds).oof.column("global_mean")
        for _, train, val in folds.splits():
            np.testing.assert_allclose(oof[val], y[train].mean())

    def test_constant_risk(self, rng):
        X, y = self._features(rng)
        bundle = build_oof(X, y, [ConstantPredictor(0.0, "zero")], stratified_partition(y, 5, seed=0))
        assert bundle.per_model_rmse["zero"] == pytest.approx(rmse(np.zeros_like(y), y))

    def test_no_leakage_from_validation_targets(self, rng):
        for trial in range(10):
            X, y = self._features(rng, n=40)
            folds = stratified_partition(y, 4, seed=trial)
            pool = default_predictors(X.shape[1])
            base = build_oof(X, y, pool, folds, seed=trial).oof.values
            _, val = folds.split(trial % 4)
            y2 = y.copy()
            y2[val] += 100.0 * rng.standard_normal(len(val))
            moved = build_oof(X, y2, pool, folds, seed=trial).oof.values
            np.testing.assert_array_equal(base[val], moved[val])

    def test_parallel_matches_serial(self, rng):
        X, y = self._features(rng)
        folds = stratified_partition(y, 5, seed=0)
        pool = default_predictors(3)
        serial = build_oof(X, y, pool, folds, n_jobs=1).oof.values
        threaded = build_oof(X, y, pool, folds, n_jobs=3).oof.values
        np.testing.assert_array_equal(serial, threaded)

    def test_predictor_failure(self, rng):
        X, y = self._features(rng)
        with pytest.raises(PredictorError) as info:
            build_oof(X, y, [BrokenPredictor()], stratified_partition(y, 5, seed=0))
        assert info.value.model == "broken"
        assert info.value.fold == 0


class TestSubsample:
    def test_size_and_order(self, rng):
        y = rng.standard_normal(200)
        idx = stratified_subsample(y, 0.25, seed=1)
        assert len(idx) == 50
        assert np.all(np.diff(idx) > 0)

    def test_full_fraction(self):
        np.testing.assert_array_equal(stratified_subsample(np.arange(6.0), 1.0), np.arange(6))

    def test_covers_target_range(self, rng):
        y = rng.standard_normal(1000)
        idx = stratified_subsample(y, 0.1, seed=2)
        ranks = np.argsort(np.argsort(y))[idx]
        assert np.all(np.bincount(ranks // 100, minlength=10) == 10)

    def test_rejects_bad_fraction(self):
        with pytest.raises(ValueError):
            stratified_subsample(np.arange(5.0), 0.0)
