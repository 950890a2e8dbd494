import re

import numpy as np

from errors.exceptions import DimensionError, InputError

MODEL_NAME_REGEX = re.compile(r"^[^\s,\"][^,\"]{0,127}$")


def is_valid_model_name(name: str) -> bool:
    return bool(MODEL_NAME_REGEX.fullmatch(name or "")) and name.strip() == name


def as_finite_vector(values, what: str = "vector") -> np.ndarray:
    """Copy to a 1-D float64 array, rejecting NaN/inf."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{what} rank", 1, arr.ndim)
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise InputError(f"{what} has {bad} non-finite entries")
    return arr


def as_finite_matrix(values, what: str = "matrix") -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{what} rank", 2, arr.ndim)
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise InputError(f"{what} has {bad} non-finite entries")
    return arr


def require_same_length(a: np.ndarray, b: np.ndarray, what: str = "pred/target") -> None:
    if len(a) != len(b):
        raise DimensionError(f"{what} length", len(b), len(a))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed for (seed, *keys); independent of call order."""
    entropy = [int(seed)] + [int(k) + 1 for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
