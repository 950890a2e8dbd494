# cli/parser.py
import argparse

from config.pipeline_config import BASELINES, META_LEARNERS
from config.settings import settings
from errors.exceptions import UsageError

DEFAULT_FRACTIONS = (0.1, 0.25, 0.5, 0.75, 1.0)


class StackArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting, so commands keep one exit path."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"fraction must lie in (0, 1], got {text}")
    return value


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help=f"Pipeline config JSON (default: {settings.DEFAULT_CONFIG_PATH} if present)")
    p.add_argument("--folds", type=int, help="Outer CV folds")
    p.add_argument("--seed", type=int, help="Seed for every random component")
    p.add_argument("--inner-folds", type=int, help="Inner CV folds for penalty selection")
    p.add_argument("--tau-corr", type=float, help="Correlation threshold for redundancy projection")
    p.add_argument("--tau-mse", type=float, help="MSE-between threshold for redundancy projection")
    p.add_argument("--tau-var", type=float, help="Variance threshold for pruning")
    p.add_argument("--meta", nargs="+", choices=META_LEARNERS, help="Meta-learners to fit")
    p.add_argument("--baselines", nargs="+", choices=BASELINES, help="Baselines to compute")
    p.add_argument("--jobs", type=_positive_int, default=None, help=f"Worker threads (default {settings.N_JOBS})")


def build_parser() -> StackArgumentParser:
    parser = StackArgumentParser(prog="stackvault", description="Redundancy-aware regularized stacking")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=StackArgumentParser)

    run = sub.add_parser("run", help="Run the full pipeline on an OOF predictions CSV")
    run.add_argument("predictions", help="CSV with id, target and one column per model")
    run.add_argument("--test", help="CSV with id and the same model columns (no target)")
    run.add_argument("--out", default="out", help="Output directory")
    _add_pipeline_flags(run)

    synth = sub.add_parser("synth", help="Generate a clustered synthetic predictions CSV")
    synth.add_argument("--n-samples", type=_positive_int, default=5000)
    synth.add_argument("--n-clusters", type=_positive_int, default=4)
    synth.add_argument("--models-per-cluster", type=_positive_int, default=5)
    synth.add_argument("--noise", type=float, default=1.0)
    synth.add_argument("--rho-within", type=float, default=0.999)
    synth.add_argument("--heterogeneity", type=float, default=1.0)
    synth.add_argument("--outlier-rate", type=float, default=0.05)
    synth.add_argument("--outlier-scale", type=float, default=10.0)
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--out", default="synthetic.csv", help="Output CSV path")

    ablate = sub.add_parser("ablate", help="Cumulative component ablation")
    ablate.add_argument("predictions")
    ablate.add_argument("--out", default="out", help="Output directory")
    _add_pipeline_flags(ablate)

    dedup = sub.add_parser("dedup", help="Redundancy projection only")
    dedup.add_argument("predictions")
    dedup.add_argument("--out", default="out", help="Output directory")
    _add_pipeline_flags(dedup)

    scale = sub.add_parser("scale", help="Run the pipeline on stratified subsamples")
    scale.add_argument("predictions")
    scale.add_argument("--fractions", nargs="+", type=_fraction, default=list(DEFAULT_FRACTIONS))
    scale.add_argument("--out", default="out", help="Output directory")
    _add_pipeline_flags(scale)

    return parser


def pipeline_overrides(args: argparse.Namespace) -> dict:
    """Flags that were given, shaped like the config document."""
    redundancy = {
        "tau_corr": args.tau_corr,
        "tau_mse": args.tau_mse,
        "tau_var": args.tau_var,
    }
    overrides = {
        "folds": args.folds,
        "seed": args.seed,
        "inner_folds": args.inner_folds,
        "meta_learners": args.meta,
        "baselines": args.baselines,
        "n_jobs": args.jobs,
        "redundancy": {k: v for k, v in redundancy.items() if v is not None} or None,
    }
    return {k: v for k, v in overrides.items() if v is not None}
