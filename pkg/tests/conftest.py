import os

os.environ.setdefault("STACKVAULT_LOG_TO_FILE", "false")
os.environ.setdefault("STACKVAULT_LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from config.pipeline_config import GridConfig, PipelineConfig
from core.frames import PredictionMatrix, TargetVector
from core.synthetic import SynthSpec, generate

SMALL_GRIDS = GridConfig(
    ridge_lambdas=[1e-3, 1e-2, 1e-1, 1.0, 10.0],
    lasso_lambdas=[1e-4, 1e-3, 1e-2, 1e-1],
    elasticnet_alphas=[0.5, 1.0],
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fast_config() -> PipelineConfig:
    return PipelineConfig(folds=5, grids=SMALL_GRIDS, bootstrap_resamples=200)


@pytest.fixture
def clustered_pool() -> tuple[TargetVector, PredictionMatrix]:
    """3 clusters x 4 near-duplicates, no outliers."""
    return generate(SynthSpec(n_samples=600, n_clusters=3, models_per_cluster=4, rho_within=0.99, outlier_rate=0.0, seed=7))


@pytest.fixture
def small_pool(rng) -> tuple[TargetVector, PredictionMatrix]:
    """Four noisy, partially correlated predictors of a 300-row target."""
    y = rng.standard_normal(300)
    shared = rng.standard_normal(300)
    cols = {
        "alpha": y + 0.5 * rng.standard_normal(300),
        "beta": y + 0.4 * shared + 0.4 * rng.standard_normal(300),
        "gamma": y + 0.4 * shared + 0.45 * rng.standard_normal(300),
        "delta": 0.5 * y + 0.8 * rng.standard_normal(300),
    }
    return TargetVector(y), PredictionMatrix.from_columns(cols)
