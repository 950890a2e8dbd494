# core/predictors.py
"""
Base-predictor interface plus a few small built-in models. The built-ins exist so the engine
can synthesize correlated pools and audit OOF construction without external learners;
real pools arrive as CSV predictions.
"""

from abc import ABC, abstractmethod

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from utils.validation import as_finite_matrix, as_finite_vector


class BasePredictor(ABC):
    name: str

    @abstractmethod
    def fit(self, features: np.ndarray, targets: np.ndarray, seed: int | None = None) -> "BasePredictor":
        ...

    @abstractmethod
    def predict(self, features: np.ndarray) -> np.ndarray:
        ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


class ConstantPredictor(BasePredictor):
    """Always predicts `value`; useful as a floor and for metric identities."""

    def __init__(self, value: float = 0.0, name: str | None = None):
        self.value = float(value)
        self.name = name or f"constant_{value:g}"

    def fit(self, features, targets, seed=None):
        return self

    def predict(self, features):
        return np.full(len(features), self.value)


class MeanPredictor(BasePredictor):
    def __init__(self, name: str = "global_mean"):
        self.name = name
        self.mean_: float | None = None

    def fit(self, features, targets, seed=None):
        self.mean_ = float(np.mean(as_finite_vector(targets, "targets")))
        return self

    def predict(self, features):
        return np.full(len(features), self.mean_)


class UnivariateLeastSquares(BasePredictor):
    """y ~ a + b * x[:, feature]."""

    def __init__(self, feature: int, name: str | None = None):
        self.feature = feature
        self.name = name or f"ols_x{feature}"
        self.intercept_ = 0.0
        self.slope_ = 0.0

    def fit(self, features, targets, seed=None):
        x = as_finite_matrix(features, "features")[:, self.feature]
        y = as_finite_vector(targets, "targets")
        xc = x - x.mean()
        denom = float(np.dot(xc, xc))
        self.slope_ = float(np.dot(xc, y - y.mean()) / denom) if denom > 0 else 0.0
        self.intercept_ = float(y.mean() - self.slope_ * x.mean())
        return self

    def predict(self, features):
        x = as_finite_matrix(features, "features")[:, self.feature]
        return self.intercept_ + self.slope_ * x


class FixedRidgePredictor(BasePredictor):
    """Ridge on all features at a fixed lambda; intercept unpenalized via centering."""

    def __init__(self, lam: float = 1.0, name: str | None = None):
        self.lam = float(lam)
        self.name = name or f"ridge_{lam:g}"
        self.coef_: np.ndarray | None = None
        self.intercept_ = 0.0

    def fit(self, features, targets, seed=None):
        X = as_finite_matrix(features, "features")
        y = as_finite_vector(targets, "targets")
        x_mean = X.mean(axis=0)
        y_mean = float(y.mean())
        Xc = X - x_mean
        gram = Xc.T @ Xc + len(y) * self.lam * np.eye(X.shape[1])
        self.coef_ = cho_solve(cho_factor(gram), Xc.T @ (y - y_mean))
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        return self

    def predict(self, features):
        return self.intercept_ + as_finite_matrix(features, "features") @ self.coef_


class KNearestMean(BasePredictor):
    """Mean target of the k nearest training rows (Euclidean). Ties go to the lower row index."""

    def __init__(self, k: int = 5, name: str | None = None):
        self.k = int(k)
        self.name = name or f"knn_{k}"
        self._X: np.ndarray | None = None
        self._y: np.ndarray | None = None

    def fit(self, features, targets, seed=None):
        self._X = as_finite_matrix(features, "features").copy()
        self._y = as_finite_vector(targets, "targets").copy()
        return self

    def predict(self, features):
        Q = as_finite_matrix(features, "features")
        k = min(self.k, len(self._y))
        d2 = ((Q[:, None, :] - self._X[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return self._y[nearest].mean(axis=1)


def default_predictors(n_features: int) -> list[BasePredictor]:
    """A small correlated pool: mean, one OLS per feature, two ridges, two kNNs."""
    pool: list[BasePredictor] = [MeanPredictor()]
    pool += [UnivariateLeastSquares(j) for j in range(n_features)]
    pool += [FixedRidgePredictor(0.01), FixedRidgePredictor(1.0)]
    pool += [KNearestMean(3), KNearestMean(7)]
    return pool
