# core/reports.py
"""Coefficient summaries and residual tables built from fitted meta-learners."""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from core.metafeatures import BASE, INTERACTION, STATISTICAL, feature_type
from core.solvers import FitResult
from errors.exceptions import InputError
from utils.validation import as_finite_vector, require_same_length

WEIGHT_COLUMNS = ["rank", "feature", "type", "weight", "abs_weight", "fold_std"]
ERROR_BIN_COLUMNS = ["bin", "target_lo", "target_hi", "count", "mean_error", "std_error", "mae"]


def gini(values) -> float:
    """Mean absolute difference form: sum_ij |x_i - x_j| / (2 n^2 mean). All-zero input gives 0."""
    x = np.abs(as_finite_vector(values, "values"))
    if len(x) == 0:
        raise InputError("gini of an empty vector")
    mean = x.mean()
    if mean == 0.0:
        return 0.0
    x = np.sort(x)
    n = len(x)
    # sum_ij |x_i - x_j| = 2 * sum_i (2i - n + 1) x_(i) for ascending x, i from 0
    pair_sum = 2.0 * float(np.dot(2.0 * np.arange(n) - n + 1.0, x))
    return pair_sum / (2.0 * n * n * mean)


@dataclass(frozen=True)
class WeightReport:
    table: pd.DataFrame
    mean_abs_by_type: dict[str, float]
    gini: float
    weight_rmse_corr: float | None

    def top(self, k: int = 10) -> pd.DataFrame:
        return self.table.head(k)

    def to_dict(self) -> dict:
        return {
            "features": self.table.to_dict(orient="records"),
            "mean_abs_by_type": self.mean_abs_by_type,
            "gini": self.gini,
            "weight_rmse_corr": self.weight_rmse_corr,
        }


def weight_report(fit: FitResult, per_model_rmse: dict[str, float]) -> WeightReport:
    """
    Features ranked by |mean weight across folds| (ties by name), tagged base, statistical
    or interaction. Also the mean |weight| per type, the Gini coefficient of |weights| and the
    Pearson correlation between |weight| and OOF RMSE over base models.
    """
    names = list(fit.feature_names)
    weights = np.asarray(fit.weights)
    fold_std = fit.fold_weights.std(axis=0)
    frame = pd.DataFrame({
        "feature": names,
        "type": [feature_type(n) for n in names],
        "weight": weights,
        "abs_weight": np.abs(weights),
        "fold_std": fold_std,
    })
    frame = frame.sort_values(["abs_weight", "feature"], ascending=[False, True], kind="stable").reset_index(drop=True)
    frame.insert(0, "rank", np.arange(1, len(frame) + 1))

    by_type = {
        t: float(frame.loc[frame["type"] == t, "abs_weight"].mean())
        for t in (BASE, STATISTICAL, INTERACTION)
        if (frame["type"] == t).any()
    }

    base = frame[(frame["type"] == BASE) & frame["feature"].isin(list(per_model_rmse))]
    corr = None
    if len(base) >= 2:
        mags = base["abs_weight"].to_numpy()
        risks = np.array([per_model_rmse[n] for n in base["feature"]])
        if np.ptp(mags) > 0 and np.ptp(risks) > 0:
            corr = float(np.corrcoef(mags, risks)[0, 1])

    return WeightReport(table=frame[WEIGHT_COLUMNS], mean_abs_by_type=by_type, gini=gini(weights), weight_rmse_corr=corr)


def binned_errors(pred, target, n_bins: int = 10) -> pd.DataFrame:
    """Equal-count target bins with count, mean/std of (pred - target) and MAE per bin."""
    p = as_finite_vector(pred, "pred")
    y = as_finite_vector(target, "target")
    require_same_length(p, y)
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    n_bins = min(n_bins, len(y))
    order = np.argsort(y, kind="stable")
    bin_of = np.empty(len(y), dtype=np.int64)
    bin_of[order] = (np.arange(len(y)) * n_bins) // len(y)
    err = p - y
    rows = []
    for b in range(n_bins):
        mask = bin_of == b
        e = err[mask]
        rows.append({
            "bin": b,
            "target_lo": float(y[mask].min()),
            "target_hi": float(y[mask].max()),
            "count": int(mask.sum()),
            "mean_error": float(e.mean()),
            "std_error": float(e.std()),
            "mae": float(np.abs(e).mean()),
        })
    return pd.DataFrame(rows, columns=ERROR_BIN_COLUMNS)
