import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors.exceptions import ConfigError
from utils.logger_factory import setup_logger

logger = setup_logger(__name__)

MetaLearner = Literal["ridge", "lasso", "elasticnet"]
Baseline = Literal["best_single", "uniform_average", "weighted_average", "linear_stack", "hill_climb"]

META_LEARNERS: tuple[str, ...] = ("ridge", "lasso", "elasticnet")
BASELINES: tuple[str, ...] = ("best_single", "uniform_average", "weighted_average", "linear_stack", "hill_climb")


def _logspace(lo_exp: float, hi_exp: float, n: int) -> list[float]:
    return [float(v) for v in np.logspace(lo_exp, hi_exp, n)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, ser_json_inf_nan="constants")


class RedundancyConfig(_Strict):
    tau_corr: Annotated[float, Field(description="Correlation threshold of the joint suppression rule", gt=0.0, le=1.0)] = 0.95
    tau_mse: Annotated[float | None, Field(description="Absolute MSE threshold; None means tau_mse_scale * Var(target)", ge=0.0)] = None
    tau_mse_scale: Annotated[float, Field(description="Scale-relative default for tau_mse", ge=0.0)] = 0.05
    tau_var: Annotated[float, Field(description="Columns with variance <= tau_var are pruned", ge=0.0)] = 0.01

    def resolve_tau_mse(self, target: np.ndarray) -> float:
        if self.tau_mse is not None:
            return float(self.tau_mse)
        return float(self.tau_mse_scale * np.var(target))


class GridConfig(_Strict):
    ridge_lambdas: Annotated[list[float], Field(description="Ridge lambda grid", min_length=1)] = _logspace(-3, 5, 50)
    lasso_lambdas: Annotated[list[float], Field(description="Lasso lambda grid (also used by elasticnet)", min_length=1)] = _logspace(-5, 0.1, 30)
    elasticnet_alphas: Annotated[list[float], Field(description="Elasticnet L1 mixing values", min_length=1)] = [0.1, 0.5, 0.7, 0.9, 0.95, 0.99, 1.0]

    @field_validator("ridge_lambdas", "lasso_lambdas")
    @classmethod
    def _nonnegative(cls, v: list[float]) -> list[float]:
        if any(not math.isfinite(x) or x < 0 for x in v):
            raise ValueError("lambdas must be finite and >= 0")
        return v

    @field_validator("elasticnet_alphas")
    @classmethod
    def _unit_interval(cls, v: list[float]) -> list[float]:
        if any(not 0.0 <= x <= 1.0 for x in v):
            raise ValueError("alphas must lie in [0, 1]")
        return v

    def size(self, kind: str) -> int:
        if kind == "ridge":
            return len(self.ridge_lambdas)
        if kind == "lasso":
            return len(self.lasso_lambdas)
        return len(self.lasso_lambdas) * len(self.elasticnet_alphas)


class HillClimbConfig(_Strict):
    max_steps: Annotated[int, Field(ge=1)] = 100
    patience: Annotated[int, Field(ge=1)] = 10


class SolverConfig(_Strict):
    tol: Annotated[float, Field(description="Coordinate descent stop: max coordinate change", gt=0.0)] = 1e-7
    max_iter: Annotated[int, Field(description="Coordinate descent sweep budget", ge=1)] = 10_000


class PipelineConfig(_Strict):
    folds: Annotated[int, Field(description="Outer CV folds (L)", ge=2)] = 10
    seed: Annotated[int, Field(description="Single source of randomness", ge=0)] = 42
    n_bins: Annotated[int | None, Field(description="Target quantile bins for stratification; None = folds", ge=1)] = None
    inner_folds: Annotated[int, Field(description="Inner CV folds for hyperparameter selection", ge=2)] = 3
    redundancy: RedundancyConfig = RedundancyConfig()
    grids: GridConfig = GridConfig()
    solver: SolverConfig = SolverConfig()
    hill_climb: HillClimbConfig = HillClimbConfig()
    meta_learners: Annotated[list[MetaLearner], Field(min_length=1)] = list(META_LEARNERS)
    baselines: list[Baseline] = list(BASELINES)
    stack_lambda: Annotated[float | None, Field(description="Fixed lambda for the vanilla stack; None tunes it on the ridge grid", ge=0.0)] = None
    ablation_lambda: Annotated[float | None, Field(description="Fixed ridge lambda for the ablation rows before blending; None tunes each row on the ridge grid", ge=0.0)] = 1e-6
    reference_method: Annotated[str | None, Field(description="Method the paired t-tests compare against; None = hill_climb when enabled, else pipeline")] = None
    alpha: Annotated[float, Field(description="Family-wise significance level before Bonferroni", gt=0.0, lt=1.0)] = 0.05
    bootstrap_resamples: Annotated[int, Field(ge=100)] = 1000
    bootstrap_level: Annotated[float, Field(gt=0.0, lt=1.0)] = 0.95
    diagnostic_lambda: Annotated[float, Field(description="Lambda for the ridge perturbation constant", ge=0.0)] = 1.0
    error_bins: Annotated[int, Field(description="Target bins for the binned-error table", ge=1)] = 10
    n_jobs: Annotated[int, Field(ge=1)] = 1

    @field_validator("meta_learners", "baselines")
    @classmethod
    def _dedupe(cls, v: list[str]) -> list[str]:
        return list(dict.fromkeys(v))

    @model_validator(mode="after")
    def _reference_known(self) -> "PipelineConfig":
        known = set(self.baselines) | {"pipeline"} | set(self.meta_learners)
        if self.reference_method is not None and self.reference_method not in known:
            raise ValueError(f"reference_method '{self.reference_method}' is not an enabled method")
        return self

    @property
    def reference(self) -> str:
        if self.reference_method is not None:
            return self.reference_method
        return "hill_climb" if "hill_climb" in self.baselines else "pipeline"

    @property
    def strata(self) -> int:
        return self.n_bins or self.folds

    def effective(self) -> dict[str, Any]:
        """Fully-defaulted config as echoed into reports."""
        return self.model_dump(mode="json")


def _deep_merge(base: dict, updates: dict) -> dict:
    merged = dict(base)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_pipeline_config(document: dict | None = None, overrides: dict | None = None, source: str | None = None) -> PipelineConfig:
    """Defaults < document < overrides; validation errors become ConfigError."""
    data = _deep_merge(document or {}, {k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"{loc}: {first['msg']}", source) from e


def load_pipeline_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    document: dict = {}
    if path is not None:
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                document = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError("file not found", str(path)) from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON ({e.msg} at line {e.lineno})", str(path)) from e
        if not isinstance(document, dict):
            raise ConfigError("top level must be an object", str(path))
        logger.info(f"📄 Loaded pipeline config from {path}")
    return build_pipeline_config(document, overrides, str(path) if path else None)
