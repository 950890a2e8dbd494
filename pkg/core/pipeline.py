# core/pipeline.py
"""
End-to-end run: variance pruning -> redundancy projection -> meta-feature augmentation ->
nested-CV meta-learners -> inverse-RMSE blend, scored against the baselines on the raw pool.
"""

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from config.pipeline_config import PipelineConfig
from core.ensemble import (
    BlendResult,
    HillClimbState,
    best_single,
    blend,
    hill_climb,
    linear_stack,
    uniform_average,
    weighted_average,
)
from core.folds import FoldAssignment, OofBundle, stratified_partition
from core.frames import PredictionMatrix, TargetVector
from core.metafeatures import augment
from core.metrics import MetricReport
from core.redundancy import SelectionResult, perturbation_constant, project, variance_prune
from core.reports import WeightReport, binned_errors, weight_report
from core.solvers import FitResult, PenaltySpec, fold_fit, nested_cv_fit
from core.stats import (
    BootstrapCI,
    ComparisonReport,
    FoldConsistency,
    bootstrap_ci,
    compare,
    fold_consistency,
    fold_rmse,
)
from errors.exceptions import DimensionError, SelectionError
from utils.decorators import handle_exceptions, pipeline_stage
from utils.logger_factory import setup_logger

logger = setup_logger(__name__)

SCHEMA_VERSION = "1.0"
PIPELINE = "pipeline"

ABLATION_STEPS = (
    "baseline_ridge_stack",
    "+dedup",
    "+variance_pruning",
    "+statistical_aggregations",
    "+interaction_features",
    "+blending",
)


@dataclass
class MethodResult:
    name: str
    family: str
    oof_pred: np.ndarray
    n_models: int
    metrics: MetricReport
    fold_rmse: np.ndarray
    consistency: FoldConsistency
    ci: BootstrapCI
    test_pred: np.ndarray | None = None
    detail: dict[str, Any] = field(default_factory=dict)
    comparison: ComparisonReport | None = None
    delta_rmse: float | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            "n_models": self.n_models,
            "metrics": self.metrics.to_dict(),
            "ci": self.ci.to_dict(),
            "fold_rmse": [float(v) for v in self.fold_rmse],
            "consistency": self.consistency.to_dict(),
            "delta_rmse": self.delta_rmse,
            "comparison": self.comparison.to_dict() if self.comparison else None,
            "detail": self.detail,
        }


@dataclass
class RunReport:
    """
    Everything a run produced. `to_dict` is the versioned, deterministic document;
    wall-clock timings live beside it in `timings` and are serialized separately.
    """
    config: dict
    n_samples: int
    pool: tuple[str, ...]
    folds: FoldAssignment
    variance_removed: list[str]
    selection: SelectionResult
    perturbation: dict[str, float]
    methods: list[MethodResult]
    fits: dict[str, FitResult]
    blend: BlendResult
    hill: HillClimbState | None
    weight_reports: dict[str, WeightReport]
    errors_by_bin: pd.DataFrame
    reference_method: str
    n_comparisons: int
    fit_calls: dict[str, int]
    target: np.ndarray | None = field(default=None, repr=False)
    timings: dict[str, float] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def method(self, name: str) -> MethodResult:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def pipeline(self) -> MethodResult:
        return self.method(PIPELINE)

    def method_table(self) -> pd.DataFrame:
        rows = []
        for m in self.methods:
            cmp = m.comparison
            rows.append({
                "method": m.name,
                "family": m.family,
                "rmse": m.metrics.rmse,
                "ci_lo": m.ci.lo,
                "ci_hi": m.ci.hi,
                "mae": m.metrics.mae,
                "r_squared": m.metrics.r_squared,
                "pearson": m.metrics.pearson,
                "delta_rmse": m.delta_rmse,
                "p_value": cmp.p_value if cmp else None,
                "marker": cmp.marker if cmp else "",
                "n_models": m.n_models,
                "fold_mean": m.consistency.mean,
                "fold_std": m.consistency.std,
                "cv_percent": m.consistency.cv_percent,
            })
        return pd.DataFrame(rows)

    def path_frame(self) -> pd.DataFrame:
        rows = []
        for kind, fit in self.fits.items():
            for point in fit.path:
                rows.append({"meta_learner": kind} | point.to_dict())
        return pd.DataFrame(rows, columns=["meta_learner", "lambda", "alpha", "mean_rmse", "std_rmse", "n_selected"])

    def fold_frame(self) -> pd.DataFrame:
        rows = []
        for m in self.methods:
            for i, r in enumerate(m.fold_rmse):
                rows.append({"method": m.name, "fold": i, "rmse": float(r)})
        return pd.DataFrame(rows, columns=["method", "fold", "rmse"])

    def predictions_frame(self, test: bool = False) -> pd.DataFrame | None:
        if test:
            cols = {m.name: m.test_pred for m in self.methods if m.test_pred is not None}
            return pd.DataFrame(cols) if cols else None
        return pd.DataFrame({m.name: m.oof_pred for m in self.methods})

    def oof_frame(self, ids=None) -> pd.DataFrame:
        """OOF predictions with row id, outer fold and target, enough to rebuild residual plots."""
        frame = self.predictions_frame()
        frame.insert(0, "id", list(ids) if ids is not None else range(self.n_samples))
        frame.insert(1, "fold", self.folds.fold_of)
        if self.target is not None:
            frame.insert(2, "target", self.target)
        return frame

    def to_dict(self) -> dict:
        sel = self.selection
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "data": {
                "n_samples": self.n_samples,
                "n_models": len(self.pool),
                "models": list(self.pool),
                "fold_sizes": [int(s) for s in self.folds.sizes()],
            },
            "selection": {
                "variance_removed": self.variance_removed,
                "candidates": list(sel.candidates),
                "retained": list(sel.retained),
                "k_eff": sel.k_eff,
                "tau_mse": sel.tau_mse,
                "removals": sel.removal_table().to_dict(orient="records"),
                "model_rmse": sel.risks,
            },
            "conditioning": {
                "before": sel.before.to_dict(),
                "after": sel.after.to_dict(),
                "kappa_reduction_pct": sel.kappa_reduction_pct,
                "perturbation_constant": self.perturbation,
            },
            "meta_learners": {
                kind: {
                    "penalty": fit.penalty.to_dict(),
                    "sparsity": fit.sparsity,
                    "converged": fit.converged,
                    "fit_calls": fit.fit_calls,
                    "folds": fit.fold_trace(),
                    "weights": self.weight_reports[kind].to_dict(),
                }
                for kind, fit in self.fits.items()
                if kind in self.weight_reports
            },
            "blend": self.blend.to_dict(),
            "hill_climb": self.hill.to_dict() if self.hill else None,
            "reference_method": self.reference_method,
            "n_comparisons": self.n_comparisons,
            "methods": [m.to_dict() for m in self.methods],
            "errors_by_bin": self.errors_by_bin.to_dict(orient="records"),
            "fit_calls": self.fit_calls,
        }


def _unpack(oof: OofBundle | PredictionMatrix, test: PredictionMatrix | None) -> tuple[PredictionMatrix, PredictionMatrix | None, int]:
    if isinstance(oof, OofBundle):
        return oof.oof, test if test is not None else oof.test, oof.fit_calls
    return oof, test, 0


def _check_inputs(pool: PredictionMatrix, target, test: PredictionMatrix | None) -> TargetVector:
    y = target if isinstance(target, TargetVector) else TargetVector(target)
    if pool.n_models == 0:
        raise SelectionError("empty model pool")
    if pool.n_rows != len(y):
        raise DimensionError("prediction rows", len(y), pool.n_rows)
    if test is not None:
        missing = [n for n in pool.names if n not in test]
        if missing:
            raise DimensionError("test prediction columns", list(pool.names), list(test.names))
    return y


class _Scorer:
    """Turns (name, predictions) into MethodResults with the shared fold/bootstrap protocol."""

    def __init__(self, y: np.ndarray, folds: FoldAssignment, cfg: PipelineConfig):
        self.y = y
        self.folds = folds
        self.cfg = cfg

    def __call__(self, name, family, pred, n_models, test_pred=None, detail=None) -> MethodResult:
        per_fold = fold_rmse(pred, self.y, self.folds)
        return MethodResult(
            name=name,
            family=family,
            oof_pred=np.asarray(pred, dtype=np.float64),
            n_models=n_models,
            metrics=MetricReport.evaluate(pred, self.y),
            fold_rmse=per_fold,
            consistency=fold_consistency(per_fold),
            ci=bootstrap_ci(pred - self.y, "rmse", self.cfg.bootstrap_resamples, self.cfg.bootstrap_level, self.cfg.seed),
            test_pred=test_pred,
            detail=detail or {},
        )


def _meta_fit(kind, design, y, folds, cfg: PipelineConfig, test_design) -> FitResult:
    return nested_cv_fit(
        design.matrix,
        y,
        folds,
        kind,
        grid=cfg.grids,
        inner_folds=cfg.inner_folds,
        test_X=test_design.matrix if test_design is not None else None,
        seed=cfg.seed,
        solver=cfg.solver,
        n_jobs=cfg.n_jobs,
        feature_names=design.column_names,
    )


def _stack_baseline(pool, y, folds, cfg: PipelineConfig, test) -> FitResult:
    return linear_stack(
        pool, y, folds,
        lam=cfg.stack_lambda,
        grid=cfg.grids,
        inner_folds=cfg.inner_folds,
        solver=cfg.solver,
        test=test,
        seed=cfg.seed,
        n_jobs=cfg.n_jobs,
    )


def _baselines(pool, y, folds, cfg, test, score, fits, fit_calls) -> tuple[list[MethodResult], HillClimbState | None]:
    results: list[MethodResult] = []
    hill = None
    for name in cfg.baselines:
        if name == "best_single":
            chosen, _ = best_single(pool, y)
            results.append(score(name, "baseline", pool.column(chosen), 1,
                                 test.column(chosen) if test is not None else None, {"model": chosen}))
        elif name == "uniform_average":
            results.append(score(name, "baseline", uniform_average(pool), pool.n_models,
                                 uniform_average(test.select(pool.names)) if test is not None else None))
        elif name == "weighted_average":
            w, pred = weighted_average(pool, y)
            results.append(score(name, "baseline", pred, pool.n_models,
                                 test.select(pool.names).values @ w if test is not None else None,
                                 {"weights": dict(zip(pool.names, (float(v) for v in w)))}))
        elif name == "linear_stack":
            fit = _stack_baseline(pool, y, folds, cfg, test)
            fits["linear_stack"] = fit
            fit_calls["linear_stack"] = fit.fit_calls
            results.append(score(name, "baseline", fit.oof_pred, pool.n_models, fit.test_pred,
                                 {"penalty": fit.penalty.to_dict()}))
        elif name == "hill_climb":
            hill = hill_climb(pool, y, cfg.hill_climb.max_steps, cfg.hill_climb.patience, test)
            results.append(score(name, "baseline", hill.current_pred, hill.n_selected, hill.test_pred))
    return results, hill


def _attach_comparisons(methods: list[MethodResult], reference: str, alpha: float) -> int:
    ref = next(m for m in methods if m.name == reference)
    others = [m for m in methods if m.name != reference]
    m_tests = max(len(others), 1)
    for m in others:
        m.comparison = compare(m.name, m.fold_rmse, ref.name, ref.fold_rmse, alpha, m_tests)
        m.delta_rmse = m.metrics.rmse - ref.metrics.rmse
    ref.delta_rmse = 0.0
    return m_tests


@handle_exceptions
def run(oof: OofBundle | PredictionMatrix, target, cfg: PipelineConfig | None = None, test: PredictionMatrix | None = None) -> RunReport:
    """
    Every reported number is out-of-fold: the meta-learners and the tuned linear stack use
    nested CV on one shared stratified fold assignment, and the fixed-rule baselines are
    scored on the base models' OOF predictions.
    """
    cfg = cfg or PipelineConfig()
    pool, test, base_calls = _unpack(oof, test)
    timings: dict[str, float] = {}

    with pipeline_stage("validation", timings):
        y_vec = _check_inputs(pool, target, test)
        y = y_vec.values
        folds = stratified_partition(y, cfg.folds, cfg.strata, cfg.seed)

    with pipeline_stage("variance_pruning", timings):
        pruned, removed = variance_prune(pool, cfg.redundancy.tau_var)

    with pipeline_stage("projection", timings):
        selection = project(pruned, y_vec, cfg.redundancy)
        retained = selection.apply(pruned)
        perturbation = {
            "lambda": cfg.diagnostic_lambda,
            "before": perturbation_constant(pruned, cfg.diagnostic_lambda),
            "after": perturbation_constant(retained, cfg.diagnostic_lambda),
        }

    with pipeline_stage("augmentation", timings):
        design = augment(retained)
        test_design = augment(test.select(retained.names)) if test is not None else None

    fits: dict[str, FitResult] = {}
    fit_calls: dict[str, int] = {"base_models": base_calls}
    with pipeline_stage("meta_learning", timings):
        for kind in cfg.meta_learners:
            fit = _meta_fit(kind, design, y, folds, cfg, test_design)
            fits[kind] = fit
            fit_calls[kind] = fit.fit_calls

    with pipeline_stage("blending", timings):
        blended = blend([(k, fits[k].oof_pred, fits[k].test_pred) for k in cfg.meta_learners], y)

    score = _Scorer(y, folds, cfg)
    with pipeline_stage("baselines", timings):
        methods, hill = _baselines(pool, y, folds, cfg, test, score, fits, fit_calls)

    with pipeline_stage("evaluation", timings):
        for kind in cfg.meta_learners:
            fit = fits[kind]
            methods.append(score(kind, "meta_learner", fit.oof_pred, selection.k_eff, fit.test_pred,
                                 {"penalty": fit.penalty.to_dict(), "sparsity": fit.sparsity}))
        methods.append(score(PIPELINE, PIPELINE, blended.final_pred, selection.k_eff, blended.test_pred,
                             {"blend_weights": dict(zip(blended.member_names, (float(w) for w in blended.weights)))}))
        n_comparisons = _attach_comparisons(methods, cfg.reference, cfg.alpha)
        reports = {k: weight_report(fits[k], selection.risks) for k in cfg.meta_learners}
        by_bin = binned_errors(blended.final_pred, y, cfg.error_bins)

    report = RunReport(
        config=cfg.effective(),
        n_samples=len(y),
        pool=pool.names,
        folds=folds,
        variance_removed=removed,
        selection=selection,
        perturbation=perturbation,
        methods=methods,
        fits=fits,
        blend=blended,
        hill=hill,
        weight_reports=reports,
        errors_by_bin=by_bin,
        reference_method=cfg.reference,
        n_comparisons=n_comparisons,
        fit_calls=fit_calls,
        target=y,
        timings=timings,
    )
    logger.info(
        f"🏁 [run] pipeline rmse {report.pipeline.metrics.rmse:.6g} with K_eff={selection.k_eff}/{pool.n_models}"
    )
    return report


@dataclass(frozen=True)
class AblationRow:
    name: str
    metrics: MetricReport
    delta_rmse: float
    relative_pct: float
    cumulative_pct: float
    n_features: int

    def to_dict(self) -> dict:
        return {
            "configuration": self.name,
            "metrics": self.metrics.to_dict(),
            "delta_rmse": self.delta_rmse,
            "relative_pct": self.relative_pct,
            "cumulative_pct": self.cumulative_pct,
            "n_features": self.n_features,
        }


def ablation_frame(rows: list[AblationRow]) -> pd.DataFrame:
    return pd.DataFrame([
        {
            "configuration": r.name,
            "rmse": r.metrics.rmse,
            "mae": r.metrics.mae,
            "r_squared": r.metrics.r_squared,
            "delta_rmse": r.delta_rmse,
            "relative_pct": r.relative_pct,
            "cumulative_pct": r.cumulative_pct,
            "n_features": r.n_features,
        }
        for r in rows
    ])


def _ablation_fit(X: np.ndarray, names, y, folds, cfg: PipelineConfig) -> np.ndarray:
    if cfg.ablation_lambda is None:
        fit = nested_cv_fit(X, y, folds, "ridge", grid=cfg.grids, inner_folds=cfg.inner_folds, seed=cfg.seed,
                            solver=cfg.solver, n_jobs=cfg.n_jobs, feature_names=names)
    else:
        fit = fold_fit(X, y, folds, PenaltySpec("ridge", cfg.ablation_lambda), solver=cfg.solver,
                       n_jobs=cfg.n_jobs, feature_names=names)
    return fit.oof_pred


@handle_exceptions
def ablate(oof: OofBundle | PredictionMatrix, target, cfg: PipelineConfig | None = None) -> list[AblationRow]:
    """
    Cumulative configurations, each adding one component to the previous: ridge stack on
    the raw pool, redundancy projection, variance pruning, the four statistics, the two
    interactions, and finally the blend of all configured meta-learners. Deltas are
    against the previous row.

    The first five rows share one ridge at cfg.ablation_lambda (near-OLS by default) so
    each delta isolates the added component; the blending row uses the nested-CV
    meta-learners of the full pipeline.
    """
    cfg = cfg or PipelineConfig()
    pool, _, _ = _unpack(oof, None)
    y_vec = _check_inputs(pool, target, None)
    y = y_vec.values
    folds = stratified_partition(y, cfg.folds, cfg.strata, cfg.seed)
    preds: list[tuple[str, np.ndarray, int]] = []

    with pipeline_stage("ablation", None):
        preds.append((ABLATION_STEPS[0], _ablation_fit(pool.values, pool.names, y, folds, cfg), pool.n_models))

        deduped = project(pool, y_vec, cfg.redundancy).apply(pool)
        preds.append((ABLATION_STEPS[1], _ablation_fit(deduped.values, deduped.names, y, folds, cfg), deduped.n_models))

        pruned, _ = variance_prune(pool, cfg.redundancy.tau_var)
        retained = project(pruned, y_vec, cfg.redundancy).apply(pruned)
        preds.append((ABLATION_STEPS[2], _ablation_fit(retained.values, retained.names, y, folds, cfg), retained.n_models))

        for step, interactions in ((ABLATION_STEPS[3], False), (ABLATION_STEPS[4], True)):
            design = augment(retained, True, interactions)
            preds.append((step, _ablation_fit(design.matrix, design.column_names, y, folds, cfg), design.width))

        fits = {kind: _meta_fit(kind, design, y, folds, cfg, None) for kind in cfg.meta_learners}
        blended = blend([(k, fits[k].oof_pred, None) for k in cfg.meta_learners], y)
        preds.append((ABLATION_STEPS[5], blended.final_pred, design.width))

    rows: list[AblationRow] = []
    first = prev = None
    for name, pred, width in preds:
        metrics = MetricReport.evaluate(pred, y)
        r = metrics.rmse
        first = r if first is None else first
        delta = 0.0 if prev is None else r - prev
        rel = 0.0 if not prev else 100.0 * delta / prev
        cum = 0.0 if not first else 100.0 * (r - first) / first
        rows.append(AblationRow(name, metrics, delta, rel, cum, width))
        prev = r
        logger.info(f"[ablation] {name:<26} rmse {r:.6g} (delta {delta:+.3g})")
    return rows

