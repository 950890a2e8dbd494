# core/stats.py
"""Paired t-tests with Bonferroni correction, bootstrap intervals and fold-stability summaries."""

from dataclasses import dataclass, asdict
from typing import Literal

import numpy as np
from scipy import stats as sps

from core.folds import FoldAssignment
from errors.exceptions import InputError
from utils.validation import as_finite_vector, require_same_length

Statistic = Literal["rmse", "mae"]


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    exact_difference: bool = False


def paired_t_test(a, b) -> TTestResult:
    """
    Two-tailed paired t on a - b with L-1 degrees of freedom. All-zero differences give
    t=0, p=1. Identical nonzero differences have no variance: t=+-inf, p=0 and the
    exact_difference flag is set.
    """
    x = as_finite_vector(a, "a")
    y = as_finite_vector(b, "b")
    require_same_length(x, y, "paired samples")
    if len(x) < 2:
        raise InputError(f"paired t-test needs at least 2 pairs, got {len(x)}")
    d = x - y
    df = len(d) - 1
    if np.all(d == 0.0):
        return TTestResult(0.0, 1.0, df)
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return TTestResult(float(np.copysign(np.inf, mean)), 0.0, df, exact_difference=True)
    t = mean / (sd / np.sqrt(len(d)))
    p = float(2.0 * sps.t.sf(abs(t), df))
    return TTestResult(float(t), min(max(p, 0.0), 1.0), df)


def significance_marker(p: float, significant: bool = False) -> str:
    """Stars by raw p-value, plus a dagger when the Bonferroni-corrected test rejects."""
    stars = "***" if p < 0.001 else "**" if p < 0.01 else "*" if p < 0.05 else ""
    return stars + ("†" if significant else "")


@dataclass(frozen=True)
class ComparisonReport:
    method_a: str
    method_b: str
    fold_rmse_a: tuple[float, ...]
    fold_rmse_b: tuple[float, ...]
    t_stat: float
    p_value: float
    bonferroni_alpha: float
    significant: bool
    exact_difference: bool = False

    @property
    def marker(self) -> str:
        return significance_marker(self.p_value, self.significant)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["fold_rmse_a"] = list(self.fold_rmse_a)
        out["fold_rmse_b"] = list(self.fold_rmse_b)
        out["marker"] = self.marker
        return out


def compare(method_a: str, fold_rmse_a, method_b: str, fold_rmse_b, alpha: float = 0.05, n_comparisons: int = 1) -> ComparisonReport:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    m = max(int(n_comparisons), 1)
    res = paired_t_test(fold_rmse_a, fold_rmse_b)
    threshold = alpha / m
    return ComparisonReport(
        method_a=method_a,
        method_b=method_b,
        fold_rmse_a=tuple(float(v) for v in fold_rmse_a),
        fold_rmse_b=tuple(float(v) for v in fold_rmse_b),
        t_stat=res.t,
        p_value=res.p,
        bonferroni_alpha=threshold,
        significant=res.p <= threshold,
        exact_difference=res.exact_difference,
    )


def _statistic(errors: np.ndarray, statistic: Statistic) -> np.ndarray:
    """Statistic along the last axis."""
    if statistic == "rmse":
        return np.sqrt(np.mean(errors ** 2, axis=-1))
    if statistic == "mae":
        return np.mean(np.abs(errors), axis=-1)
    raise ValueError(f"unknown statistic '{statistic}'")


@dataclass(frozen=True)
class BootstrapCI:
    point: float
    lo: float
    hi: float
    n_resamples: int
    seed: int
    level: float = 0.95
    statistic: str = "rmse"

    def to_dict(self) -> dict:
        return asdict(self)


def bootstrap_ci(per_sample_errors, statistic: Statistic = "rmse", n: int = 1000, level: float = 0.95, seed: int = 42) -> BootstrapCI:
    """
    Percentile interval over `n` row resamples with replacement. Resample i draws from its
    own child of SeedSequence(seed), so the interval depends only on (errors, n, seed).
    The interval is widened to contain the point estimate when the percentiles miss it.
    """
    e = as_finite_vector(per_sample_errors, "errors")
    if len(e) == 0:
        raise InputError("bootstrap needs at least one error")
    if n < 100:
        raise ValueError(f"bootstrap needs at least 100 resamples, got {n}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    point = float(_statistic(e, statistic))
    children = np.random.SeedSequence(seed).spawn(n)
    idx = np.stack([np.random.default_rng(child).integers(0, len(e), len(e)) for child in children])
    values = _statistic(e[idx], statistic)
    tail = (1.0 - level) / 2.0 * 100.0
    lo, hi = np.percentile(values, [tail, 100.0 - tail])
    return BootstrapCI(
        point=point,
        lo=min(float(lo), point),
        hi=max(float(hi), point),
        n_resamples=n,
        seed=seed,
        level=level,
        statistic=statistic,
    )


@dataclass(frozen=True)
class FoldConsistency:
    mean: float
    std: float
    cv_percent: float

    def to_dict(self) -> dict:
        return asdict(self)


def fold_consistency(per_fold_rmse) -> FoldConsistency:
    """Mean, sample std and coefficient of variation (std/mean, percent)."""
    r = as_finite_vector(per_fold_rmse, "per-fold rmse")
    if len(r) < 2:
        raise InputError(f"fold consistency needs at least 2 folds, got {len(r)}")
    mean = float(r.mean())
    std = float(r.std(ddof=1))
    cv = 100.0 * std / mean if mean > 0 else 0.0
    return FoldConsistency(mean, std, cv)


def fold_rmse(pred, target, folds: FoldAssignment) -> np.ndarray:
    p = as_finite_vector(pred, "pred")
    y = as_finite_vector(target, "target")
    require_same_length(p, y)
    folds.require_samples(len(y))
    return np.array([
        np.sqrt(np.mean((p[val] - y[val]) ** 2)) for _, _, val in folds.splits()
    ])
