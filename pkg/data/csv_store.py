# data/csv_store.py
"""
Prediction CSVs: header `id`, optional `target`, then one column per model. Row order is
the sample index.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from core.frames import PredictionMatrix, TargetVector
from errors.exceptions import InputError, ParseError, StackingError
from utils.logger_factory import setup_logger

logger = setup_logger(__name__)

ID_COLUMN = "id"
TARGET_COLUMN = "target"


@dataclass(frozen=True)
class LoadedPredictions:
    ids: tuple[str, ...]
    matrix: PredictionMatrix
    target: TargetVector | None = None


def _header(path: Path) -> list[str]:
    try:
        head = pd.read_csv(path, header=None, nrows=1, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise ParseError(str(path), "file not found") from e
    except pd.errors.EmptyDataError as e:
        raise ParseError(str(path), "file is empty") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ParseError(str(path), f"unreadable CSV ({e})") from e
    return [str(h).strip() for h in head.iloc[0].tolist()]


def read_predictions_csv(path: str | Path, require_target: bool | None = None) -> LoadedPredictions:
    """
    require_target=True for training files (missing target is an error), False for test
    files (a target column is an error), None to accept either.
    """
    path = Path(path)
    header = _header(path)
    if not header or header[0] != ID_COLUMN:
        raise ParseError(str(path), f"first column must be '{ID_COLUMN}'")
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise ParseError(str(path), f"duplicate header names: {', '.join(dupes)}")

    has_target = TARGET_COLUMN in header
    if require_target and not has_target:
        raise ParseError(str(path), "target column required")
    if require_target is False and has_target:
        raise ParseError(str(path), "target column not allowed in a test file")

    models = [h for h in header if h not in (ID_COLUMN, TARGET_COLUMN)]
    if not models:
        raise ParseError(str(path), "no model columns")

    try:
        frame = pd.read_csv(path, dtype={ID_COLUMN: str}, float_precision="round_trip")
    except (pd.errors.ParserError, ValueError) as e:
        raise ParseError(str(path), f"unreadable CSV ({e})") from e
    frame.columns = header
    if frame.empty:
        raise ParseError(str(path), "no data rows")

    numeric = [c for c in header if c != ID_COLUMN]
    bad = [c for c in numeric if not pd.api.types.is_numeric_dtype(frame[c])]
    if bad:
        raise ParseError(str(path), f"non-numeric values in columns {bad}")
    if frame[numeric].isna().any().any():
        cols = [c for c in numeric if frame[c].isna().any()]
        raise ParseError(str(path), f"missing values in columns {cols}")

    try:
        matrix = PredictionMatrix(tuple(models), frame[models].to_numpy(dtype=np.float64))
        target = TargetVector(frame[TARGET_COLUMN].to_numpy(dtype=np.float64)) if has_target else None
    except StackingError as e:
        raise ParseError(str(path), str(e)) from e

    logger.info(f"📥 Loaded {matrix.n_rows} rows x {matrix.n_models} models from {path}")
    return LoadedPredictions(ids=tuple(frame[ID_COLUMN].astype(str)), matrix=matrix, target=target)


def write_predictions_csv(path: str | Path, matrix: PredictionMatrix, target: TargetVector | np.ndarray | None = None, ids=None) -> Path:
    path = Path(path)
    if ids is None:
        ids = [str(i) for i in range(matrix.n_rows)]
    if len(ids) != matrix.n_rows:
        raise InputError(f"{len(ids)} ids for {matrix.n_rows} rows")
    frame = pd.DataFrame({ID_COLUMN: list(ids)})
    if target is not None:
        values = target.values if isinstance(target, TargetVector) else np.asarray(target, dtype=np.float64)
        frame[TARGET_COLUMN] = values
    frame = pd.concat([frame, matrix.to_frame()], axis=1)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info(f"📤 Wrote {matrix.n_rows} rows x {matrix.n_models} models to {path}")
    return path
