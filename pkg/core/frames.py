# core/frames.py
"""Immutable value types shared by every stage: the target and named prediction matrices."""

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from errors.exceptions import DimensionError, InputError
from utils.validation import as_finite_matrix, as_finite_vector, is_valid_model_name


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TargetVector:
    values: np.ndarray
    name: str = "target"

    def __post_init__(self):
        arr = as_finite_vector(self.values, self.name)
        if len(arr) < 2:
            raise InputError(f"{self.name} needs at least 2 samples, got {len(arr)}")
        object.__setattr__(self, "values", _frozen(arr))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_rows(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class PredictionMatrix:
    """N x K predictions, one named column per base model."""
    names: tuple[str, ...]
    values: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.names)
        arr = as_finite_matrix(self.values, "prediction matrix")
        if arr.shape[1] != len(names):
            raise DimensionError("prediction matrix columns", len(names), arr.shape[1])
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise InputError(f"duplicate model names: {', '.join(dupes)}")
        bad = [n for n in names if not is_valid_model_name(n)]
        if bad:
            raise InputError(f"invalid model names: {bad}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", _frozen(arr))
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @classmethod
    def from_columns(cls, columns: dict[str, Iterable[float]] | Sequence[tuple[str, Iterable[float]]]) -> "PredictionMatrix":
        items = list(columns.items()) if isinstance(columns, dict) else list(columns)
        if not items:
            raise InputError("prediction matrix needs at least one column")
        cols = [as_finite_vector(v, name) for name, v in items]
        lengths = {len(c) for c in cols}
        if len(lengths) != 1:
            raise DimensionError("column lengths", len(cols[0]), sorted(lengths))
        return cls(tuple(name for name, _ in items), np.column_stack(cols))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_models(self) -> int:
        return self.values.shape[1]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self._index[name]]

    def select(self, names: Sequence[str]) -> "PredictionMatrix":
        missing = [n for n in names if n not in self._index]
        if missing:
            raise InputError(f"unknown models: {missing}")
        idx = [self._index[n] for n in names]
        return PredictionMatrix(tuple(names), self.values[:, idx])

    def take_rows(self, rows: np.ndarray) -> "PredictionMatrix":
        return PredictionMatrix(self.names, self.values[rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, columns=list(self.names))
