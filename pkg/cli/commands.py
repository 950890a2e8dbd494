# cli/commands.py
"""CLI commands. Each returns a process exit code; errors become one-line diagnostics."""

import argparse
import sys
import time
from pathlib import Path

import pandas as pd

from cli.parser import build_parser, pipeline_overrides
from config.pipeline_config import PipelineConfig, load_pipeline_config
from config.settings import settings
from config.time_helpers import format_seconds
from core import pipeline
from core.folds import stratified_subsample
from core.frames import TargetVector
from core.redundancy import project
from core.synthetic import SynthSpec, generate
from data.csv_store import read_predictions_csv, write_predictions_csv
from data.report_writer import render_report, write_frame, write_json, write_run_outputs
from errors.exceptions import ConfigError, UsageError
from utils.decorators import exit_on_error
from utils.logger_factory import setup_logger
from utils.validation import derive_seed

logger = setup_logger(__name__)


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides = pipeline_overrides(args)
    overrides.setdefault("n_jobs", settings.N_JOBS)
    path = args.config
    if path is None and Path(settings.DEFAULT_CONFIG_PATH).is_file():
        path = settings.DEFAULT_CONFIG_PATH
    return load_pipeline_config(path, overrides)


@exit_on_error
def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    train = read_predictions_csv(args.predictions, require_target=True)
    test = read_predictions_csv(args.test, require_target=False) if args.test else None
    report = pipeline.run(train.matrix, train.target, cfg, test=test.matrix if test is not None else None)
    write_run_outputs(args.out, report, ids=train.ids, test_ids=test.ids if test is not None else None)
    sys.stdout.write(render_report(report))
    return 0


@exit_on_error
def cmd_synth(args: argparse.Namespace) -> int:
    try:
        spec = SynthSpec(
            n_samples=args.n_samples,
            n_clusters=args.n_clusters,
            models_per_cluster=args.models_per_cluster,
            noise=args.noise,
            rho_within=args.rho_within,
            heterogeneity=args.heterogeneity,
            outlier_rate=args.outlier_rate,
            outlier_scale=args.outlier_scale,
            seed=args.seed,
        )
    except ValueError as e:
        raise ConfigError(str(e), "synth flags") from e
    target, matrix = generate(spec)
    write_predictions_csv(args.out, matrix, target)
    print(f"wrote {matrix.n_rows} rows x {matrix.n_models} models to {args.out}")
    return 0


@exit_on_error
def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    train = read_predictions_csv(args.predictions, require_target=True)
    rows = pipeline.ablate(train.matrix, train.target, cfg)
    frame = pipeline.ablation_frame(rows)
    out = Path(args.out)
    write_frame(out / "ablation.csv", frame)
    write_json(out / "ablation.json", {
        "schema_version": pipeline.SCHEMA_VERSION,
        "config": cfg.effective(),
        "rows": [r.to_dict() for r in rows],
    })
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.6f}"))
    return 0


@exit_on_error
def cmd_dedup(args: argparse.Namespace) -> int:
    cfg = _config(args)
    train = read_predictions_csv(args.predictions, require_target=True)
    result = project(train.matrix, train.target, cfg.redundancy)
    out = Path(args.out)
    table = result.removal_table()
    write_frame(out / "selection_log.csv", table)
    write_json(out / "dedup.json", {
        "schema_version": pipeline.SCHEMA_VERSION,
        "config": cfg.redundancy.model_dump(mode="json"),
        "tau_mse": result.tau_mse,
        "candidates": list(result.candidates),
        "retained": list(result.retained),
        "k_eff": result.k_eff,
        "removals": table.to_dict(orient="records"),
        "conditioning": {"before": result.before.to_dict(), "after": result.after.to_dict()},
    })
    print(f"kept {result.k_eff}/{train.matrix.n_models}: {', '.join(result.retained)}")
    if not table.empty:
        print(table.to_string(index=False))
    return 0


@exit_on_error
def cmd_scale(args: argparse.Namespace) -> int:
    """Not part of the reproducible report contract: rows carry wall-clock seconds."""
    cfg = _config(args)
    train = read_predictions_csv(args.predictions, require_target=True)
    rows = []
    for i, fraction in enumerate(sorted(set(args.fractions))):
        idx = stratified_subsample(train.target.values, fraction, derive_seed(cfg.seed, i))
        start = time.perf_counter()
        report = pipeline.run(train.matrix.take_rows(idx), TargetVector(train.target.values[idx]), cfg)
        elapsed = time.perf_counter() - start
        rows.append({
            "fraction": fraction,
            "n_samples": len(idx),
            "pipeline_rmse": report.pipeline.metrics.rmse,
            "k_eff": report.selection.k_eff,
            "seconds": elapsed,
        })
        logger.info(f"📏 [scale] fraction {fraction:g}: N={len(idx)} in {format_seconds(elapsed)}")
    frame = pd.DataFrame(rows)
    write_frame(Path(args.out) / "scale.csv", frame)
    print(frame.to_string(index=False))
    return 0


COMMANDS = {
    "run": cmd_run,
    "synth": cmd_synth,
    "ablate": cmd_ablate,
    "dedup": cmd_dedup,
    "scale": cmd_scale,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return COMMANDS[args.command](args)
