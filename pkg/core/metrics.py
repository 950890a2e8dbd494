# core/metrics.py
"""The four evaluation metrics. All take (pred, target) and reject non-finite input."""

from dataclasses import dataclass, asdict

import numpy as np

from errors.exceptions import DegenerateInputError, DegenerateTargetError, InputError
from utils.validation import as_finite_vector, require_same_length


def _pair(pred, target) -> tuple[np.ndarray, np.ndarray]:
    p = as_finite_vector(pred, "pred")
    t = as_finite_vector(target, "target")
    require_same_length(p, t)
    if len(p) == 0:
        raise InputError("metrics need at least one sample")
    return p, t


def rmse(pred, target) -> float:
    p, t = _pair(pred, target)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def mae(pred, target) -> float:
    p, t = _pair(pred, target)
    return float(np.mean(np.abs(p - t)))


def r_squared(pred, target) -> float:
    """1 - SSE/SST. Negative when worse than predicting the mean."""
    p, t = _pair(pred, target)
    centered = t - t.mean()
    sst = float(np.dot(centered, centered))
    if sst == 0.0:
        raise DegenerateTargetError()
    resid = p - t
    return 1.0 - float(np.dot(resid, resid)) / sst


def pearson(a, b) -> float:
    x, y = _pair(a, b)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(np.dot(xc, xc)))
    sy = float(np.sqrt(np.dot(yc, yc)))
    if sx == 0.0:
        raise DegenerateInputError("first argument")
    if sy == 0.0:
        raise DegenerateInputError("second argument")
    return float(np.clip(np.dot(xc, yc) / (sx * sy), -1.0, 1.0))


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    mae: float
    r_squared: float
    pearson: float | None

    @classmethod
    def evaluate(cls, pred, target) -> "MetricReport":
        # A constant prediction (e.g. an all-zero model) has no correlation, not an error.
        try:
            corr = pearson(pred, target)
        except DegenerateInputError:
            corr = None
        return cls(
            rmse=rmse(pred, target),
            mae=mae(pred, target),
            r_squared=r_squared(pred, target),
            pearson=corr,
        )

    def to_dict(self) -> dict:
        return asdict(self)
