# data/report_writer.py
import json
import math
import os
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from config.time_helpers import format_seconds
from core.pipeline import RunReport
from utils.logger_factory import setup_logger

logger = setup_logger(__name__)

REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"
TIMINGS_JSON = "timings.json"


def to_jsonable(value: Any) -> Any:
    """numpy scalars/arrays to Python, non-finite floats to the strings 'inf', '-inf', 'nan'."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _atomic_write_text(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(payload)
    os.replace(tmp, path)


def write_json(path: str | Path, data: dict) -> Path:
    path = Path(path)
    payload = json.dumps(to_jsonable(data), indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False)
    _atomic_write_text(path, payload + "\n")
    return path


def write_frame(path: str | Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    _atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))
    return path


def _fmt(v, spec: str = ".5f") -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, spec)


def render_method_table(report: RunReport) -> str:
    lines = [
        f"{'method':<18} {'rmse':>10} {'95% ci':>23} {'mae':>10} {'r2':>8} {'pearson':>8} "
        f"{'d_rmse':>10} {'p':>9} {'':<4} {'K':>4} {'fold mean+-std':>20} {'cv%':>6}"
    ]
    lines.append("-" * len(lines[0]))
    for row in report.method_table().itertuples(index=False):
        ci = f"[{_fmt(row.ci_lo)}, {_fmt(row.ci_hi)}]"
        folds = f"{_fmt(row.fold_mean)} +- {_fmt(row.fold_std, '.4f')}"
        lines.append(
            f"{row.method:<18} {_fmt(row.rmse):>10} {ci:>23} {_fmt(row.mae):>10} {_fmt(row.r_squared, '.4f'):>8} "
            f"{_fmt(row.pearson, '.4f'):>8} {_fmt(row.delta_rmse, '+.5f'):>10} {_fmt(row.p_value, '.2e'):>9} "
            f"{row.marker:<4} {row.n_models:>4} {folds:>20} {_fmt(row.cv_percent, '.2f'):>6}"
        )
    return "\n".join(lines)


def render_report(report: RunReport) -> str:
    sel = report.selection
    cond = report.to_dict()["conditioning"]
    out = [
        f"stacking report (schema {report.schema_version})",
        f"samples: {report.n_samples}  models: {len(report.pool)}  K_eff: {sel.k_eff}  "
        f"folds: {report.folds.n_folds}  seed: {report.config['seed']}",
        "",
        render_method_table(report),
        "",
        f"p-values: paired t-test vs {report.reference_method}, Bonferroni over {report.n_comparisons} comparisons "
        f"(*** p<0.001, ** p<0.01, * p<0.05, † significant at alpha/m)",
        "",
        "conditioning:",
        f"  kappa        {_fmt(sel.kappa_before, '.4g')} -> {_fmt(sel.kappa_after, '.4g')} ({_fmt(sel.kappa_reduction_pct, '.1f')}% reduction)",
        f"  eff. rank    {_fmt(sel.eff_rank_before, '.4g')} -> {_fmt(sel.eff_rank_after, '.4g')}",
        f"  perturbation {_fmt(cond['perturbation_constant']['before'], '.4g')} -> "
        f"{_fmt(cond['perturbation_constant']['after'], '.4g')} (lambda={report.perturbation['lambda']:g})",
        "",
        "blend: " + ", ".join(f"{n}={w:.4f}" for n, w in zip(report.blend.member_names, report.blend.weights)),
    ]
    for kind, fit in report.fits.items():
        if kind not in report.weight_reports:
            continue
        wr = report.weight_reports[kind]
        corr = _fmt(wr.weight_rmse_corr, "+.3f")
        out.append(f"{kind}: modal {fit.penalty.label()}, sparsity {fit.sparsity:.1%}, gini {wr.gini:.3f}, |w|~rmse corr {corr}")
    if report.variance_removed:
        out.append(f"variance-pruned: {', '.join(report.variance_removed)}")
    if sel.removals:
        out += ["", "redundancy removals:"]
        out += [f"  {r.removed:<20} kept {r.kept:<20} rho={r.rho:.4f} mse={r.mse_between:.4g} d_rmse={r.delta_rmse:+.5f}" for r in sel.removals]
    return "\n".join(out) + "\n"


def write_run_outputs(out_dir: str | Path, report: RunReport, ids=None, test_ids=None) -> dict[str, Path]:
    """
    Everything except timings.json is a pure function of inputs and config, so repeated
    runs produce byte-identical files.
    """
    out = Path(out_dir)
    written = {
        "report": write_json(out / REPORT_JSON, report.to_dict()),
        "text": out / REPORT_TEXT,
        "selection": write_frame(out / "selection_log.csv", report.selection.removal_table()),
        "folds": write_frame(out / "fold_traces.csv", report.fold_frame()),
        "blend": write_frame(out / "blend_weights.csv", pd.DataFrame({
            "member": list(report.blend.member_names),
            "risk": report.blend.risks,
            "weight": report.blend.weights,
        })),
        "path": write_frame(out / "regularization_path.csv", report.path_frame()),
        "errors": write_frame(out / "error_bins.csv", report.errors_by_bin),
        "oof": write_frame(out / "oof_predictions.csv", report.oof_frame(ids)),
        "timings": write_json(out / TIMINGS_JSON, report.timings),
    }
    _atomic_write_text(written["text"], render_report(report))
    test = report.predictions_frame(test=True)
    if test is not None:
        if test_ids is not None:
            test.insert(0, "id", list(test_ids))
        written["test"] = write_frame(out / "test_predictions.csv", test)
    for kind, wr in report.weight_reports.items():
        written[f"weights_{kind}"] = write_frame(out / f"weights_{kind}.csv", wr.table)
    total = sum(report.timings.values())
    logger.info(f"💾 Wrote {len(written)} artifacts to {out} (pipeline {format_seconds(total)})")
    return written
