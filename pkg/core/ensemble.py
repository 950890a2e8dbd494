# core/ensemble.py
"""Inverse-RMSE blending of meta-learners and the comparison baselines."""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from config.pipeline_config import GridConfig, SolverConfig
from core.folds import FoldAssignment
from core.frames import PredictionMatrix, TargetVector
from core.metrics import MetricReport, rmse
from core.solvers import FitResult, PenaltySpec, fold_fit, nested_cv_fit
from errors.exceptions import DimensionError, SelectionError
from utils.logger_factory import setup_logger
from utils.validation import as_finite_vector

logger = setup_logger(__name__)


def _target(target) -> np.ndarray:
    return target.values if isinstance(target, TargetVector) else as_finite_vector(target, "target")


def inverse_risk_weights(names: Sequence[str], risks: Sequence[float]) -> np.ndarray:
    """
    w_m proportional to 1/risk_m. If any member has zero risk, the first such member in
    name order takes weight 1 and everyone else 0.
    """
    risks = np.asarray(risks, dtype=np.float64)
    if len(risks) == 0:
        raise SelectionError("cannot weight an empty member list")
    if np.any(risks < 0):
        raise ValueError("risks must be >= 0")
    zero = np.flatnonzero(risks == 0.0)
    if zero.size:
        winner = min(zero, key=lambda i: names[i])
        weights = np.zeros(len(risks))
        weights[winner] = 1.0
        logger.info(f"🎯 [blend] '{names[winner]}' has zero risk; taking it alone")
        return weights
    inv = 1.0 / risks
    return inv / inv.sum()


@dataclass(frozen=True)
class BlendResult:
    member_names: tuple[str, ...]
    risks: np.ndarray
    weights: np.ndarray
    final_pred: np.ndarray
    test_pred: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "members": list(self.member_names),
            "risks": [float(r) for r in self.risks],
            "weights": [float(w) for w in self.weights],
        }


def blend(members: Sequence[tuple[str, np.ndarray, np.ndarray | None]], target) -> BlendResult:
    """Risk-weighted convex combination of member OOF (and, when every member has one, test) predictions."""
    if not members:
        raise SelectionError("blend needs at least one member")
    y = _target(target)
    names = tuple(m[0] for m in members)
    oof = np.column_stack([as_finite_vector(m[1], f"{m[0]} oof") for m in members])
    if oof.shape[0] != len(y):
        raise DimensionError("member prediction rows", len(y), oof.shape[0])
    risks = np.array([rmse(oof[:, i], y) for i in range(len(names))])
    weights = inverse_risk_weights(names, risks)

    test_pred = None
    tests = [m[2] for m in members]
    if all(t is not None for t in tests):
        test_pred = np.column_stack(tests) @ weights
    logger.info(f"🧪 [blend] weights {dict(zip(names, np.round(weights, 4)))}")
    return BlendResult(names, risks, weights, oof @ weights, test_pred)


def best_single(oof: PredictionMatrix, target) -> tuple[str, MetricReport]:
    """Lowest OOF RMSE; ties go to the lexicographically first name."""
    if oof.n_models == 0:
        raise SelectionError("empty model pool")
    y = _target(target)
    name = min(oof.names, key=lambda n: (rmse(oof.column(n), y), n))
    return name, MetricReport.evaluate(oof.column(name), y)


def uniform_average(oof: PredictionMatrix) -> np.ndarray:
    if oof.n_models == 0:
        raise SelectionError("empty model pool")
    return oof.values.mean(axis=1)


def weighted_average(oof: PredictionMatrix, target) -> tuple[np.ndarray, np.ndarray]:
    y = _target(target)
    risks = [rmse(oof.column(n), y) for n in oof.names]
    weights = inverse_risk_weights(oof.names, risks)
    return weights, oof.values @ weights


def linear_stack(
    oof: PredictionMatrix,
    target,
    folds: FoldAssignment,
    lam: float | None = None,
    grid: GridConfig | None = None,
    inner_folds: int = 3,
    solver: SolverConfig | None = None,
    test: PredictionMatrix | None = None,
    seed: int = 42,
    n_jobs: int = 1,
) -> FitResult:
    """
    Ridge stack over the raw pool with the outer fold protocol. A fixed lam (0 = OLS) is fit
    fold-wise; lam=None tunes it on the ridge grid by nested CV.
    """
    y = _target(target)
    test_X = test.select(oof.names).values if test is not None else None
    if lam is None:
        return nested_cv_fit(oof.values, y, folds, "ridge", grid, inner_folds, test_X, seed, solver, n_jobs, oof.names)
    return fold_fit(oof.values, y, folds, PenaltySpec("ridge", lam), test_X, solver, n_jobs, oof.names)


@dataclass(frozen=True)
class HillClimbStep:
    step: int
    model: str
    rmse: float
    improved: bool

    def to_dict(self) -> dict:
        return {"step": self.step, "model": self.model, "rmse": self.rmse, "improved": self.improved}


@dataclass
class HillClimbState:
    """
    `history` holds the committed (improving) steps; `trials` every step taken, including
    non-improving additions that patience later discards.
    """
    names: tuple[str, ...]
    counts: np.ndarray
    current_pred: np.ndarray
    current_rmse: float
    history: list[HillClimbStep] = field(default_factory=list)
    trials: list[HillClimbStep] = field(default_factory=list)
    test_pred: np.ndarray | None = None

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def n_selected(self) -> int:
        return int(np.count_nonzero(self.counts))

    def to_dict(self) -> dict:
        return {
            "counts": {n: int(c) for n, c in zip(self.names, self.counts) if c},
            "rmse": self.current_rmse,
            "history": [h.to_dict() for h in self.history],
            "steps_taken": len(self.trials),
        }


def hill_climb(oof: PredictionMatrix, target, max_steps: int = 100, patience: int = 10, test: PredictionMatrix | None = None) -> HillClimbState:
    """
    Greedy forward selection with replacement. Start from the best single model; each step
    adds the model whose inclusion gives the lowest RMSE of the count-weighted average
    (ties by name). The trial ensemble keeps growing through non-improving steps, and the
    best ensemble seen is what is returned. Stops at max_steps, after `patience`
    consecutive non-improving steps, or at zero RMSE.
    """
    if oof.n_models == 0:
        raise SelectionError("empty model pool")
    if max_steps < 1 or patience < 1:
        raise ValueError("max_steps and patience must be >= 1")
    y = _target(target)
    order = sorted(range(oof.n_models), key=lambda k: oof.names[k])
    P = oof.values[:, order]
    names = tuple(oof.names[k] for k in order)

    def candidate_rmse(total_sum: np.ndarray, total: int) -> np.ndarray:
        trial = (total_sum[:, None] + P) / (total + 1)
        return np.sqrt(np.mean((trial - y[:, None]) ** 2, axis=0))

    singles = candidate_rmse(np.zeros(len(y)), 0)
    first = int(np.argmin(singles))
    counts = np.zeros(len(names), dtype=np.int64)
    counts[first] = 1
    running = P[:, first].copy()
    best_rmse = float(singles[first])
    best_counts = counts.copy()
    step0 = HillClimbStep(1, names[first], best_rmse, True)
    history, trials = [step0], [step0]

    stale = 0
    step = 1
    while step < max_steps and best_rmse > 0.0 and stale < patience:
        step += 1
        scores = candidate_rmse(running, int(counts.sum()))
        k = int(np.argmin(scores))
        counts[k] += 1
        running += P[:, k]
        improved = bool(scores[k] < best_rmse)
        entry = HillClimbStep(step, names[k], float(scores[k]), improved)
        trials.append(entry)
        if improved:
            best_rmse = float(scores[k])
            best_counts = counts.copy()
            history.append(entry)
            stale = 0
        else:
            stale += 1
        logger.debug(f"[hill_climb] step {step}: +{names[k]} -> {scores[k]:.6g}{'' if improved else ' (no gain)'}")

    weights = best_counts / best_counts.sum()
    test_pred = test.select(names).values @ weights if test is not None else None
    # restore input column order for reporting
    inverse = np.argsort(order)
    state = HillClimbState(
        names=tuple(oof.names),
        counts=best_counts[inverse],
        current_pred=P @ weights,
        current_rmse=best_rmse,
        history=history,
        trials=trials,
        test_pred=test_pred,
    )
    logger.info(f"⛰️ [hill_climb] {len(history)} improving steps of {len(trials)}, {state.n_selected} models, rmse {best_rmse:.6g}")
    return state
