# core/folds.py

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from core.frames import PredictionMatrix
from core.metrics import rmse
from core.predictors import BasePredictor
from errors.exceptions import DimensionError, PartitionError, PredictorError, SelectionError
from utils.logger_factory import setup_logger
from utils.validation import as_finite_matrix, as_finite_vector, derive_seed

logger = setup_logger(__name__)


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    n_folds: int

    def __post_init__(self):
        fold_of = np.asarray(self.fold_of, dtype=np.int64)
        if self.n_folds < 2:
            raise PartitionError(len(fold_of), self.n_folds, "need at least 2 folds")
        if fold_of.size and (fold_of.min() < 0 or fold_of.max() >= self.n_folds):
            raise PartitionError(len(fold_of), self.n_folds, "fold index out of range")
        sizes = np.bincount(fold_of, minlength=self.n_folds)
        if np.any(sizes == 0):
            raise PartitionError(len(fold_of), self.n_folds, f"empty folds {np.flatnonzero(sizes == 0).tolist()}")
        fold_of.setflags(write=False)
        object.__setattr__(self, "fold_of", fold_of)

    @property
    def n_samples(self) -> int:
        return len(self.fold_of)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.n_folds)

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train rows, validation rows) for one fold, both ascending."""
        mask = self.fold_of == fold
        return np.flatnonzero(~mask), np.flatnonzero(mask)

    def splits(self) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
        for fold in range(self.n_folds):
            train, val = self.split(fold)
            yield fold, train, val

    def require_samples(self, n: int) -> None:
        if n != self.n_samples:
            raise DimensionError("fold assignment length", n, self.n_samples)


def stratified_partition(target, n_folds: int = 10, n_bins: int | None = None, seed: int = 42) -> FoldAssignment:
    """
    Bucket the continuous target into `n_bins` equal-count quantile bins, shuffle each bin
    with a seeded generator and deal its members round-robin across folds. The dealing
    position carries over from bin to bin, so overall fold sizes also differ by at most one.
    """
    y = as_finite_vector(target, "target")
    n = len(y)
    n_bins = n_folds if n_bins is None else n_bins
    if n_folds < 2 or n < n_folds:
        raise PartitionError(n, n_folds)
    if n_bins < 1:
        raise PartitionError(n, n_folds, f"n_bins must be >= 1, got {n_bins}")

    order = np.argsort(y, kind="stable")
    bin_of = np.empty(n, dtype=np.int64)
    bin_of[order] = (np.arange(n) * n_bins) // n

    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    offset = 0
    for b in range(n_bins):
        members = np.flatnonzero(bin_of == b)
        if members.size == 0:
            continue
        members = rng.permutation(members)
        fold_of[members] = (offset + np.arange(members.size)) % n_folds
        offset += members.size
    logger.debug(f"[folds] stratified {n} rows into {n_folds} folds over {n_bins} bins (seed={seed})")
    return FoldAssignment(fold_of, n_folds)


def kfold_partition(n: int, n_folds: int, seed: int) -> FoldAssignment:
    """Plain shuffled k-fold, used for the inner hyperparameter loop."""
    if n_folds < 2 or n < n_folds:
        raise PartitionError(n, n_folds)
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % n_folds
    return FoldAssignment(fold_of, n_folds)


@dataclass(frozen=True)
class OofBundle:
    oof: PredictionMatrix
    test: PredictionMatrix | None
    per_model_rmse: dict[str, float]
    fit_calls: int


def _fit_predict(predictor: BasePredictor, X_train, y_train, X_eval, seed: int, fold: int) -> np.ndarray:
    model = copy.deepcopy(predictor)
    try:
        model.fit(X_train, y_train, seed=seed)
        pred = np.asarray(model.predict(X_eval), dtype=np.float64)
    except Exception as e:
        raise PredictorError(predictor.name, fold, e) from e
    if pred.shape != (len(X_eval),) or not np.all(np.isfinite(pred)):
        raise PredictorError(predictor.name, fold, ValueError("prediction has wrong shape or non-finite values"))
    return pred


def build_oof(
    features,
    target,
    predictors: Sequence[BasePredictor],
    folds: FoldAssignment,
    test_features=None,
    seed: int = 42,
    n_jobs: int = 1,
) -> OofBundle:
    """
    Leakage-free OOF matrix: for every fold, each predictor is trained on the other folds
    and fills exactly the rows of this fold. Test columns come from one refit per predictor
    on all training rows. Each (fold, model) fit gets its own derived seed, so the result is
    the same for any n_jobs.
    """
    if not predictors:
        raise SelectionError("no base predictors given")
    X = as_finite_matrix(features, "features")
    y = as_finite_vector(target, "target")
    folds.require_samples(len(y))
    if X.shape[0] != len(y):
        raise DimensionError("feature rows", len(y), X.shape[0])
    names = [p.name for p in predictors]
    X_test = as_finite_matrix(test_features, "test features") if test_features is not None else None

    tasks = []
    for fold, train, val in folds.splits():
        for k, predictor in enumerate(predictors):
            tasks.append((fold, k, predictor, train, val))

    def run(task):
        fold, k, predictor, train, val = task
        return _fit_predict(predictor, X[train], y[train], X[val], derive_seed(seed, fold, k), fold)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    oof = np.full((len(y), len(predictors)), np.nan)
    for (_, k, _, _, val), pred in zip(tasks, results):
        oof[val, k] = pred
    fit_calls = len(tasks)
    if np.isnan(oof).any():
        raise PartitionError(len(y), folds.n_folds, "some rows belong to no fold")

    test = None
    if X_test is not None:
        cols = [
            _fit_predict(p, X, y, X_test, derive_seed(seed, folds.n_folds, k), -1)
            for k, p in enumerate(predictors)
        ]
        fit_calls += len(predictors)
        test = PredictionMatrix(tuple(names), np.column_stack(cols))

    matrix = PredictionMatrix(tuple(names), oof)
    per_model = {name: rmse(matrix.column(name), y) for name in names}
    logger.info(f"✅ [oof] {len(predictors)} models x {folds.n_folds} folds -> {fit_calls} fits")
    return OofBundle(oof=matrix, test=test, per_model_rmse=per_model, fit_calls=fit_calls)


def stratified_subsample(target, fraction: float, seed: int = 42) -> np.ndarray:
    """
    Ascending row indices of a target-stratified subsample: the sorted target is cut into
    round(fraction * N) equal-count strata and one random row is drawn from each.
    """
    y = as_finite_vector(target, "target")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    n = len(y)
    m = max(int(round(fraction * n)), 1)
    if m >= n:
        return np.arange(n)
    order = np.argsort(y, kind="stable")
    edges = (np.arange(m + 1) * n) // m
    rng = np.random.default_rng(seed)
    picks = order[rng.integers(edges[:-1], edges[1:])]
    return np.sort(picks)
