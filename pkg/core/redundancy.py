# core/redundancy.py
"""
Prediction-space redundancy projection, variance pruning and spectral diagnostics of the
model-correlation matrix.
"""

from dataclasses import dataclass, asdict, field

import numpy as np
import pandas as pd

from config.pipeline_config import RedundancyConfig
from core.frames import PredictionMatrix, TargetVector
from errors.exceptions import DegenerateInputError, SelectionError
from utils.logger_factory import setup_logger

logger = setup_logger(__name__)

REMOVAL_COLUMNS = ["removed", "kept", "rho", "mse_between", "delta_rmse"]


@dataclass(frozen=True)
class Removal:
    removed: str
    kept: str
    rho: float
    mse_between: float
    delta_rmse: float


@dataclass(frozen=True)
class ConditioningStats:
    kappa: float
    eff_rank: float
    spectrum: tuple[float, ...]

    @property
    def sigma_max(self) -> float:
        return self.spectrum[0]

    @property
    def sigma_min(self) -> float:
        return self.spectrum[-1]

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "eff_rank": self.eff_rank, "spectrum": list(self.spectrum)}


@dataclass(frozen=True)
class SelectionResult:
    retained: tuple[str, ...]
    removals: tuple[Removal, ...]
    candidates: tuple[str, ...]
    risks: dict[str, float] = field(repr=False)
    tau_mse: float
    before: ConditioningStats
    after: ConditioningStats

    @property
    def k_eff(self) -> int:
        return len(self.retained)

    @property
    def kappa_before(self) -> float:
        return self.before.kappa

    @property
    def kappa_after(self) -> float:
        return self.after.kappa

    @property
    def eff_rank_before(self) -> float:
        return self.before.eff_rank

    @property
    def eff_rank_after(self) -> float:
        return self.after.eff_rank

    @property
    def kappa_reduction_pct(self) -> float:
        if not np.isfinite(self.before.kappa):
            return 100.0
        return 100.0 * (1.0 - self.after.kappa / self.before.kappa)

    def removal_table(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.removals], columns=REMOVAL_COLUMNS)

    def apply(self, matrix: PredictionMatrix) -> PredictionMatrix:
        return matrix.select(self.retained)


def _column_risks(matrix: PredictionMatrix, y: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean((matrix.values - y[:, None]) ** 2, axis=0))


def correlation_matrix(values: np.ndarray) -> np.ndarray:
    """
    Pearson correlation between columns. A constant column has correlation 1 with an exactly
    equal column and 0 with everything else.
    """
    centered = values - values.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    constant = np.ptp(values, axis=0) == 0.0
    safe = np.where(constant, 1.0, norms)
    corr = (centered.T @ centered) / np.outer(safe, safe)
    corr = 0.5 * (corr + corr.T)
    if constant.any():
        for j in np.flatnonzero(constant):
            equal = np.all(values == values[:, [j]], axis=0)
            corr[j, :] = np.where(equal, 1.0, 0.0)
            corr[:, j] = corr[j, :]
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def conditioning(matrix: PredictionMatrix | np.ndarray) -> ConditioningStats:
    """
    Singular spectrum of the model-correlation matrix, its condition number and the
    effective rank Tr(C)/sigma_max. A single column is trivially conditioned.
    """
    values = matrix.values if isinstance(matrix, PredictionMatrix) else np.asarray(matrix, dtype=np.float64)
    spans = np.ptp(values, axis=0)
    if np.any(spans == 0.0):
        names = matrix.names if isinstance(matrix, PredictionMatrix) else range(values.shape[1])
        const = [n for n, s in zip(names, spans) if s == 0.0]
        raise DegenerateInputError(f"prediction column(s) {const} (prune before conditioning)")
    if values.shape[1] == 1:
        return ConditioningStats(kappa=1.0, eff_rank=1.0, spectrum=(1.0,))
    corr = correlation_matrix(values)
    spectrum = np.linalg.svd(corr, compute_uv=False)
    s_max, s_min = float(spectrum[0]), float(spectrum[-1])
    kappa = s_max / s_min if s_min > 0.0 else float("inf")
    return ConditioningStats(kappa=kappa, eff_rank=float(np.trace(corr)) / s_max, spectrum=tuple(float(s) for s in spectrum))


def perturbation_constant(matrix: PredictionMatrix | np.ndarray, lam: float) -> float:
    """kappa(C + lam*I) / sigma_min(P) with C = P'P / N: the ridge weight perturbation bound."""
    P = matrix.values if isinstance(matrix, PredictionMatrix) else np.asarray(matrix, dtype=np.float64)
    gram = P.T @ P / P.shape[0]
    eig = np.linalg.eigvalsh(gram + lam * np.eye(P.shape[1]))
    s_min_p = float(np.linalg.svd(P, compute_uv=False)[-1])
    if eig[0] <= 0.0 or s_min_p <= 0.0:
        return float("inf")
    return float(eig[-1] / eig[0]) / s_min_p


def _nonconstant_conditioning(matrix: PredictionMatrix) -> ConditioningStats:
    """Conditioning over the nonconstant columns only; projection may run before pruning."""
    live = [n for n, s in zip(matrix.names, np.ptp(matrix.values, axis=0)) if s > 0.0]
    if not live:
        return ConditioningStats(kappa=1.0, eff_rank=1.0, spectrum=(1.0,))
    return conditioning(matrix.select(live))


def variance_prune(oof: PredictionMatrix, tau_var: float) -> tuple[PredictionMatrix, list[str]]:
    """Keep columns with Var(p_k) > tau_var (population variance)."""
    if tau_var < 0:
        raise ValueError(f"tau_var must be >= 0, got {tau_var}")
    variances = oof.values.var(axis=0)
    keep = [n for n, v in zip(oof.names, variances) if v > tau_var]
    removed = [n for n, v in zip(oof.names, variances) if v <= tau_var]
    if not keep:
        raise SelectionError(f"variance pruning at tau_var={tau_var} removed all {oof.n_models} models")
    if removed:
        logger.info(f"✂️ [variance] pruned {len(removed)} near-constant models: {removed}")
    return oof.select(keep), removed


def project(oof: PredictionMatrix, target: TargetVector | np.ndarray, cfg: RedundancyConfig | None = None) -> SelectionResult:
    """
    Visit models by ascending OOF RMSE (ties by name). A candidate is suppressed when any
    model ahead of it in that order has Corr >= tau_corr and MSE-between <= tau_mse, whether
    or not that model survived; otherwise it is retained. Raising tau_corr or lowering
    tau_mse therefore only ever grows the retained set.

    Removals record the suppressor, preferring a retained one. In a chain a ~ b ~ c with a
    and c dissimilar, c is suppressed by b even though b itself was removed.
    """
    cfg = cfg or RedundancyConfig()
    if oof.n_models == 0:
        raise SelectionError("empty model pool")
    y = target.values if isinstance(target, TargetVector) else np.asarray(target, dtype=np.float64)
    tau_mse = cfg.resolve_tau_mse(y)

    risks = _column_risks(oof, y)
    order = sorted(range(oof.n_models), key=lambda k: (risks[k], oof.names[k]))
    corr = correlation_matrix(oof.values)
    P = oof.values

    retained: list[int] = []
    removals: list[Removal] = []
    for pos, k in enumerate(order):
        suppressor = None
        for ahead in order[:pos]:
            if corr[k, ahead] < cfg.tau_corr:
                continue
            mse_between = float(np.mean((P[:, k] - P[:, ahead]) ** 2))
            if mse_between > tau_mse:
                continue
            if ahead in retained:
                suppressor = (ahead, mse_between)
                break
            if suppressor is None:
                suppressor = (ahead, mse_between)
        if suppressor is None:
            retained.append(k)
            continue
        kept, mse_between = suppressor
        removals.append(Removal(
            removed=oof.names[k],
            kept=oof.names[kept],
            rho=float(corr[k, kept]),
            mse_between=mse_between,
            delta_rmse=float(risks[k] - risks[kept]),
        ))
        logger.debug(f"[projection] {oof.names[k]} suppressed by {oof.names[kept]} (rho={corr[k, kept]:.4f}, mse={mse_between:.4g})")

    retained_names = tuple(oof.names[k] for k in retained)
    candidates = tuple(oof.names[k] for k in order)
    before = _nonconstant_conditioning(oof.select(list(candidates)))
    after = _nonconstant_conditioning(oof.select(list(retained_names)))
    logger.info(
        f"🧹 [projection] kept {len(retained_names)}/{oof.n_models} models "
        f"(tau_corr={cfg.tau_corr}, tau_mse={tau_mse:.4g}); kappa {before.kappa:.4g} -> {after.kappa:.4g}"
    )
    return SelectionResult(
        retained=retained_names,
        removals=tuple(removals),
        candidates=candidates,
        risks={oof.names[k]: float(risks[k]) for k in order},
        tau_mse=tau_mse,
        before=before,
        after=after,
    )
