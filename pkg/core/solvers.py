# core/solvers.py
"""
Regularized linear meta-learners: ridge by Cholesky on the normal equations, lasso and
elastic net by cyclic coordinate descent, within-fold standardization and nested
cross-validated penalty selection.

Losses are scaled by 1/n so grid lambdas do not depend on the sample count:

    ridge       (1/2n)||y - Xw||^2 + (lam/2)||w||^2        <=>  (X'X + n*lam*I) w = X'y
    lasso       (1/2n)||y - Xw||^2 + lam ||w||_1
    elasticnet  (1/2n)||y - Xw||^2 + alpha*lam ||w||_1 + (1-alpha)*lam/2 ||w||^2

so elasticnet with alpha=1 is lasso and alpha=0 is ridge at the same lam. The intercept
is never penalized; it is the training mean of y after centering.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from numba import njit
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from config.pipeline_config import GridConfig, SolverConfig
from core.folds import FoldAssignment, kfold_partition
from errors.exceptions import DimensionError, SingularSystemError, SolverError
from utils.logger_factory import setup_logger
from utils.validation import as_finite_matrix, as_finite_vector, derive_seed

logger = setup_logger(__name__)

Kind = Literal["ridge", "lasso", "elasticnet"]

SINGULAR_CONDITION = 1e12
ZERO_VARIANCE_RTOL = 1e-10


@dataclass(frozen=True)
class Standardizer:
    """Column means and stds from training rows. Zero-variance columns transform to 0."""
    means: np.ndarray
    stds: np.ndarray
    live: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        scale = np.maximum(np.abs(X).max(axis=0, initial=0.0), 1.0)
        live = stds > ZERO_VARIANCE_RTOL * scale
        return cls(means=means, stds=np.where(live, stds, 1.0), live=live)

    def transform(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.means) / self.stds
        Z[:, ~self.live] = 0.0
        return Z

    @property
    def n_live(self) -> int:
        return int(self.live.sum())


@dataclass(frozen=True)
class PenaltySpec:
    kind: Kind
    lam: float
    alpha: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        alpha = self.alpha
        if self.kind == "lasso":
            alpha = 1.0
        elif self.kind == "ridge":
            alpha = 0.0
        elif alpha is None or not 0.0 <= alpha <= 1.0:
            raise ValueError(f"elasticnet alpha must lie in [0, 1], got {alpha}")
        object.__setattr__(self, "alpha", float(alpha))

    @property
    def lambda1(self) -> float:
        return self.alpha * self.lam

    @property
    def lambda2(self) -> float:
        return (1.0 - self.alpha) * self.lam / 2.0

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "lambda": self.lam}
        if self.kind == "elasticnet":
            out |= {"alpha": self.alpha, "lambda1": self.lambda1, "lambda2": self.lambda2}
        return out

    def label(self) -> str:
        if self.kind == "elasticnet":
            return f"lambda={self.lam:.4g}, alpha={self.alpha:g}"
        return f"lambda={self.lam:.4g}"


@dataclass(frozen=True)
class CDResult:
    weights: np.ndarray
    n_iter: int
    converged: bool
    objective_trace: np.ndarray


@njit(cache=True, nogil=True)
def _objective(G, c, yy, w, l1, l2):
    d = w.shape[0]
    quad = 0.0
    for i in range(d):
        row = 0.0
        for j in range(d):
            row += G[i, j] * w[j]
        quad += w[i] * row
    lin = 0.0
    l1_norm = 0.0
    l2_norm = 0.0
    for i in range(d):
        lin += c[i] * w[i]
        l1_norm += abs(w[i])
        l2_norm += w[i] * w[i]
    return 0.5 * yy - lin + 0.5 * quad + l1 * l1_norm + l2 * l2_norm


@njit(cache=True, nogil=True)
def _cd_gram(G, c, yy, w, l1, l2, tol, max_iter):
    """
    Cyclic coordinate descent on the Gram form G = X'X/n, c = X'y/n, yy = y'y/n.
    Gw is kept current so one coordinate update costs O(d).
    """
    d = c.shape[0]
    Gw = np.zeros(d)
    for i in range(d):
        for j in range(d):
            Gw[i] += G[i, j] * w[j]
    trace = np.empty(max_iter + 1)
    trace[0] = _objective(G, c, yy, w, l1, l2)
    for it in range(max_iter):
        max_delta = 0.0
        for j in range(d):
            denom = G[j, j] + 2.0 * l2
            if denom <= 0.0:
                continue
            old = w[j]
            rho = c[j] - Gw[j] + G[j, j] * old
            if rho > l1:
                new = (rho - l1) / denom
            elif rho < -l1:
                new = (rho + l1) / denom
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                w[j] = new
                for i in range(d):
                    Gw[i] += delta * G[i, j]
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        trace[it + 1] = _objective(G, c, yy, w, l1, l2)
        if max_delta < tol:
            return w, it + 1, True, trace[: it + 2]
    return w, max_iter, False, trace


def _gram(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    n = X.shape[0]
    return X.T @ X / n, X.T @ y / n, float(y @ y) / n


def _ridge_from_gram(G: np.ndarray, c: np.ndarray, lam: float) -> np.ndarray:
    A = G + lam * np.eye(G.shape[0])
    if lam == 0.0:
        cond = float(np.linalg.cond(A)) if A.size else 1.0
        if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
            raise SingularSystemError(lam, cond)
    try:
        return cho_solve(cho_factor(A), c)
    except LinAlgError as e:
        raise SingularSystemError(lam) from e


def _cd_from_gram(G, c, yy, penalty: PenaltySpec, tol: float, max_iter: int, warm_start=None) -> CDResult:
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    w0 = np.zeros(len(c)) if warm_start is None else np.array(warm_start, dtype=np.float64)
    w, n_iter, converged, trace = _cd_gram(
        np.ascontiguousarray(G), np.ascontiguousarray(c), float(yy), w0,
        float(penalty.lambda1), float(penalty.lambda2), float(tol), int(max_iter),
    )
    if not converged:
        logger.warning(f"⚠️ [cd] {penalty.kind} ({penalty.label()}) not converged after {max_iter} sweeps")
    return CDResult(weights=w, n_iter=int(n_iter), converged=bool(converged), objective_trace=trace)


def fit_ridge(X, y, lam: float) -> np.ndarray:
    """
    Solve (X'X + n*lam*I) w = X'y by Cholesky. No intercept column and no centering here:
    pass column-centered X and centered y, and the unpenalized intercept is
    mean(y) - mean(X) @ w. fit_linear and the nested-CV path do that centering (via
    Standardizer) before calling into the same solve.
    """
    X = as_finite_matrix(X, "X")
    y = as_finite_vector(y, "y")
    if X.shape[0] != len(y):
        raise DimensionError("X rows", len(y), X.shape[0])
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    G, c, _ = _gram(X, y)
    return _ridge_from_gram(G, c, float(lam))


def fit_coordinate_descent(X, y, penalty: PenaltySpec, tol: float = 1e-7, max_iter: int = 10_000, warm_start=None) -> CDResult:
    """Coordinate descent with soft-thresholding; converged when the largest update < tol."""
    X = as_finite_matrix(X, "X")
    y = as_finite_vector(y, "y")
    if X.shape[0] != len(y):
        raise DimensionError("X rows", len(y), X.shape[0])
    G, c, yy = _gram(X, y)
    return _cd_from_gram(G, c, yy, penalty, tol, max_iter, warm_start)


def lambda_max(X, y) -> float:
    """Smallest lasso lambda with an all-zero solution: max_j |x_j'y| / n."""
    X = as_finite_matrix(X, "X")
    y = as_finite_vector(y, "y")
    return float(np.max(np.abs(X.T @ y)) / len(y))


@dataclass
class LinearFit:
    """A meta-learner fitted on one training split, predicting in raw feature space."""
    standardizer: Standardizer
    weights: np.ndarray
    intercept: float
    penalty: PenaltySpec
    n_iter: int = 0
    converged: bool = True

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + self.standardizer.transform(X) @ self.weights


def _solve(G: np.ndarray, c: np.ndarray, yy: float, penalty: PenaltySpec, solver: SolverConfig, warm_start=None) -> tuple[np.ndarray, int, bool]:
    """The single point where a meta-learner system is solved; every call is one fit."""
    if len(c) == 0:
        return np.zeros(0), 0, True
    if penalty.kind == "ridge":
        return _ridge_from_gram(G, c, penalty.lam), 0, True
    res = _cd_from_gram(G, c, yy, penalty, solver.tol, solver.max_iter, warm_start)
    return res.weights, res.n_iter, res.converged


@dataclass(frozen=True)
class PreparedSplit:
    """Standardizer and Gram system of one training split, shared by every grid candidate."""
    standardizer: Standardizer
    y_mean: float
    G: np.ndarray
    c: np.ndarray
    yy: float

    @classmethod
    def of(cls, X: np.ndarray, y: np.ndarray) -> "PreparedSplit":
        std = Standardizer.fit(X)
        y_mean = float(y.mean())
        G, c, yy = _gram(std.transform(X)[:, std.live], y - y_mean)
        return cls(std, y_mean, G, c, yy)

    def solve(self, penalty: PenaltySpec, solver: SolverConfig, warm_start=None) -> LinearFit:
        live = self.standardizer.live
        warm = None if warm_start is None else np.asarray(warm_start)[live]
        w_live, n_iter, converged = _solve(self.G, self.c, self.yy, penalty, solver, warm)
        weights = np.zeros(len(live))
        weights[live] = w_live
        return LinearFit(self.standardizer, weights, self.y_mean, penalty, n_iter, converged)


def fit_linear(X: np.ndarray, y: np.ndarray, penalty: PenaltySpec, solver: SolverConfig | None = None, warm_start=None) -> LinearFit:
    """Standardize on these rows, center y, solve on the live columns, zero the rest."""
    return PreparedSplit.of(X, y).solve(penalty, solver or SolverConfig(), warm_start)


def grid_candidates(grid: GridConfig, kind: Kind) -> list[PenaltySpec]:
    """Grid order: ridge/lasso lambdas as configured; elasticnet alpha-major over the lasso lambdas."""
    if kind == "ridge":
        return [PenaltySpec("ridge", lam) for lam in grid.ridge_lambdas]
    if kind == "lasso":
        return [PenaltySpec("lasso", lam) for lam in grid.lasso_lambdas]
    if kind == "elasticnet":
        return [PenaltySpec("elasticnet", lam, a) for a in grid.elasticnet_alphas for lam in grid.lasso_lambdas]
    raise ValueError(f"unknown meta-learner kind '{kind}'")


def _warm_chains(candidates: Sequence[PenaltySpec]) -> list[list[int]]:
    """Candidate indices grouped by alpha, each chain ordered from large to small lambda."""
    chains: dict[float, list[int]] = {}
    for i, p in enumerate(candidates):
        chains.setdefault(p.alpha, []).append(i)
    return [sorted(idx, key=lambda i: (-candidates[i].lam, i)) for idx in chains.values()]


@dataclass(frozen=True)
class PathPoint:
    penalty: PenaltySpec
    mean_rmse: float
    std_rmse: float
    n_selected: int

    def to_dict(self) -> dict:
        return {
            "lambda": self.penalty.lam,
            "alpha": self.penalty.alpha if self.penalty.kind == "elasticnet" else None,
            "mean_rmse": self.mean_rmse,
            "std_rmse": self.std_rmse,
            "n_selected": self.n_selected,
        }


@dataclass
class FitResult:
    kind: str
    feature_names: tuple[str, ...]
    weights: np.ndarray
    intercept: float
    penalty: PenaltySpec
    oof_pred: np.ndarray
    per_fold_rmse: np.ndarray
    fold_weights: np.ndarray
    fold_intercepts: np.ndarray
    fold_penalties: list[PenaltySpec]
    fold_means: np.ndarray
    fit_calls: int
    path: list[PathPoint] = field(default_factory=list)
    test_pred: np.ndarray | None = None
    converged: bool = True

    @property
    def sparsity(self) -> float:
        """Mean fraction of exactly-zero weights per outer fold."""
        return float(np.mean(self.fold_weights == 0.0))

    @property
    def n_folds(self) -> int:
        return len(self.per_fold_rmse)

    def fold_trace(self) -> list[dict]:
        return [
            {"fold": i, "rmse": float(r), "penalty": p.to_dict(), "intercept": float(b)}
            for i, (r, p, b) in enumerate(zip(self.per_fold_rmse, self.fold_penalties, self.fold_intercepts))
        ]


@dataclass
class _OuterFold:
    fit: LinearFit
    val_pred: np.ndarray
    test_pred: np.ndarray | None
    inner_rmse: np.ndarray | None
    chosen: int
    calls: int


def _inner_scores(X, y, candidates, inner_folds, seed, solver) -> tuple[np.ndarray, int]:
    """Mean inner-fold RMSE per candidate (index-aligned with candidates)."""
    inner = kfold_partition(len(y), inner_folds, seed)
    scores = np.zeros((inner_folds, len(candidates)))
    calls = 0
    chains = _warm_chains(candidates)
    for f, train, val in inner.splits():
        prepared = PreparedSplit.of(X[train], y[train])
        for chain in chains:
            warm = None
            for i in chain:
                fit = prepared.solve(candidates[i], solver, warm)
                calls += 1
                warm = fit.weights
                resid = fit.predict(X[val]) - y[val]
                scores[f, i] = np.sqrt(np.mean(resid ** 2))
    return scores.mean(axis=0), calls


def _outer_fold(kind, X, y, train, val, candidates, inner_folds, seed, solver, test_X) -> _OuterFold:
    calls = 0
    inner_rmse = None
    chosen = 0
    if inner_folds > 0:
        inner_rmse, calls = _inner_scores(X[train], y[train], candidates, inner_folds, seed, solver)
        chosen = int(np.argmin(inner_rmse))
    fit = fit_linear(X[train], y[train], candidates[chosen], solver)
    calls += 1
    test_pred = fit.predict(test_X) if test_X is not None else None
    return _OuterFold(fit, fit.predict(X[val]), test_pred, inner_rmse, chosen, calls)


def _run_outer(kind, X, y, folds, candidates, inner_folds, seed, solver, test_X, n_jobs) -> list[_OuterFold]:
    def run(fold_split):
        fold, train, val = fold_split
        try:
            out = _outer_fold(kind, X, y, train, val, candidates, inner_folds, derive_seed(seed, fold), solver, test_X)
        except Exception as e:
            raise SolverError(kind, fold, e) from e
        logger.debug(f"[{kind}] fold {fold}: {candidates[out.chosen].label()}")
        return out

    splits = list(folds.splits())
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(run, splits))
    return [run(s) for s in splits]


def _assemble(kind, X, y, folds, candidates, outs: list[_OuterFold], feature_names, with_path: bool) -> FitResult:
    oof = np.empty(len(y))
    per_fold = np.empty(folds.n_folds)
    for fold, train, val in folds.splits():
        oof[val] = outs[fold].val_pred
        per_fold[fold] = np.sqrt(np.mean((outs[fold].val_pred - y[val]) ** 2))

    fold_weights = np.vstack([o.fit.weights for o in outs])
    chosen = np.array([o.chosen for o in outs])
    mode = int(np.argmax(np.bincount(chosen, minlength=len(candidates))))

    path: list[PathPoint] = []
    if with_path:
        table = np.vstack([o.inner_rmse for o in outs])
        counts = np.bincount(chosen, minlength=len(candidates))
        ddof = 1 if table.shape[0] > 1 else 0
        path = [
            PathPoint(p, float(table[:, i].mean()), float(table[:, i].std(ddof=ddof)), int(counts[i]))
            for i, p in enumerate(candidates)
        ]

    test_pred = None
    if outs and outs[0].test_pred is not None:
        test_pred = np.mean([o.test_pred for o in outs], axis=0)

    return FitResult(
        kind=kind,
        feature_names=tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(X.shape[1])),
        weights=fold_weights.mean(axis=0),
        intercept=float(np.mean([o.fit.intercept for o in outs])),
        penalty=candidates[mode],
        oof_pred=oof,
        per_fold_rmse=per_fold,
        fold_weights=fold_weights,
        fold_intercepts=np.array([o.fit.intercept for o in outs]),
        fold_penalties=[candidates[c] for c in chosen],
        fold_means=np.vstack([o.fit.standardizer.means for o in outs]),
        fit_calls=sum(o.calls for o in outs),
        path=path,
        test_pred=test_pred,
        converged=all(o.fit.converged for o in outs),
    )


def _prepare(X, y, folds: FoldAssignment, test_X, feature_names):
    X = as_finite_matrix(X, "meta design")
    y = as_finite_vector(y, "target")
    folds.require_samples(len(y))
    if X.shape[0] != len(y):
        raise DimensionError("meta design rows", len(y), X.shape[0])
    if test_X is not None:
        test_X = as_finite_matrix(test_X, "test meta design")
        if test_X.shape[1] != X.shape[1]:
            raise DimensionError("test meta design columns", X.shape[1], test_X.shape[1])
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise DimensionError("feature names", X.shape[1], len(feature_names))
    return X, y, test_X


def nested_cv_fit(
    X,
    y,
    folds: FoldAssignment,
    kind: Kind,
    grid: GridConfig | None = None,
    inner_folds: int = 3,
    test_X=None,
    seed: int = 42,
    solver: SolverConfig | None = None,
    n_jobs: int = 1,
    feature_names: Sequence[str] | None = None,
) -> FitResult:
    """
    For each outer fold: score every grid candidate by mean RMSE over an unstratified inner
    k-fold of the outer-train rows (each inner fit standardized on its own training rows),
    take the first minimizer in grid order, refit on the outer-train rows and predict the
    outer-validation rows. Exactly L*inner_folds*|grid| + L solver fits.
    """
    grid = grid or GridConfig()
    solver = solver or SolverConfig()
    if inner_folds < 2:
        raise ValueError(f"inner_folds must be >= 2, got {inner_folds}")
    X, y, test_X = _prepare(X, y, folds, test_X, feature_names)
    candidates = grid_candidates(grid, kind)
    outs = _run_outer(kind, X, y, folds, candidates, inner_folds, seed, solver, test_X, n_jobs)
    result = _assemble(kind, X, y, folds, candidates, outs, feature_names, with_path=True)
    logger.info(
        f"✅ [{kind}] nested CV: {len(candidates)} candidates x {folds.n_folds} folds, "
        f"{result.fit_calls} fits, oof rmse {np.sqrt(np.mean((result.oof_pred - y) ** 2)):.6g}, modal {result.penalty.label()}"
    )
    return result


def fold_fit(
    X,
    y,
    folds: FoldAssignment,
    penalty: PenaltySpec,
    test_X=None,
    solver: SolverConfig | None = None,
    n_jobs: int = 1,
    feature_names: Sequence[str] | None = None,
) -> FitResult:
    """Fold-wise fit at one fixed penalty: L fits, no inner selection."""
    solver = solver or SolverConfig()
    X, y, test_X = _prepare(X, y, folds, test_X, feature_names)
    outs = _run_outer(penalty.kind, X, y, folds, [penalty], 0, 0, solver, test_X, n_jobs)
    return _assemble(penalty.kind, X, y, folds, [penalty], outs, feature_names, with_path=False)
