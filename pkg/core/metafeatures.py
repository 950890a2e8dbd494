# core/metafeatures.py

from dataclasses import dataclass

import numpy as np

from core.frames import PredictionMatrix
from errors.exceptions import SelectionError

STAT_COLUMNS = ("mean", "std", "median", "range")
INTERACTION_COLUMNS = ("mean_std_interaction", "range_std_interaction")
META_COLUMNS = STAT_COLUMNS + INTERACTION_COLUMNS

BASE, STATISTICAL, INTERACTION = "base", "statistical", "interaction"


def feature_type(name: str) -> str:
    if name in STAT_COLUMNS:
        return STATISTICAL
    if name in INTERACTION_COLUMNS:
        return INTERACTION
    return BASE


@dataclass(frozen=True)
class MetaDesign:
    matrix: np.ndarray
    column_names: tuple[str, ...]
    n_base: int

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.column_names.index(name)]


def row_statistics(values: np.ndarray) -> dict[str, np.ndarray]:
    """Per-row ensemble mean, population std, median, max-min range and the two products."""
    mu = values.mean(axis=1)
    sigma = values.std(axis=1)
    r = values.max(axis=1) - values.min(axis=1)
    return {
        "mean": mu,
        "std": sigma,
        "median": np.median(values, axis=1),
        "range": r,
        "mean_std_interaction": mu * sigma,
        "range_std_interaction": r * sigma,
    }


def augment(retained: PredictionMatrix, include_stats: bool = True, include_interactions: bool = True) -> MetaDesign:
    """
    X_meta = [retained columns | mean | std | median | range | mean*std | range*std].
    The two switches drop the statistic and interaction blocks for ablation runs.
    """
    if retained.n_models == 0:
        raise SelectionError("cannot augment an empty selection")
    stats = row_statistics(retained.values)
    names = list(retained.names)
    blocks = [retained.values]
    extra = (STAT_COLUMNS if include_stats else ()) + (INTERACTION_COLUMNS if include_interactions else ())
    for col in extra:
        if col in retained:
            raise SelectionError(f"model name '{col}' collides with a meta-feature column")
        names.append(col)
        blocks.append(stats[col][:, None])
    return MetaDesign(matrix=np.hstack(blocks), column_names=tuple(names), n_base=retained.n_models)
