# errors/exceptions.py


class StackingError(Exception):
    """Base for every error the engine raises on purpose. Carries the CLI exit code."""
    exit_code = 3


class UsageError(StackingError):
    exit_code = 1


class ConfigError(StackingError):
    """Config document unreadable, unknown keys, or values out of range."""
    exit_code = 1

    def __init__(self, detail: str, source: str | None = None):
        self.detail = detail
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"config error{where}: {detail}")


class ParseError(StackingError):
    """CSV file could not be turned into a prediction matrix."""
    exit_code = 2

    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


class DimensionError(StackingError):
    exit_code = 2

    def __init__(self, what: str, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected {expected}, got {got}")


class InputError(StackingError):
    """Non-finite or otherwise unusable values handed to a value type or metric."""
    exit_code = 2


class PartitionError(StackingError):
    exit_code = 2

    def __init__(self, n_samples: int, n_folds: int, detail: str = ""):
        self.n_samples = n_samples
        self.n_folds = n_folds
        extra = f" ({detail})" if detail else ""
        super().__init__(f"cannot split {n_samples} samples into {n_folds} folds{extra}")


class SelectionError(StackingError):
    """Model pool empty before or after a selection step."""
    exit_code = 2


class DegenerateInputError(StackingError):
    """Constant vector where a nonconstant one is required."""

    def __init__(self, what: str):
        self.what = what
        super().__init__(f"{what} is constant; statistic undefined")


class DegenerateTargetError(DegenerateInputError):
    def __init__(self):
        super().__init__("target")


class SingularSystemError(StackingError):
    def __init__(self, lam: float, condition: float | None = None):
        self.lam = lam
        self.condition = condition
        cond = f" (cond={condition:.3g})" if condition is not None else ""
        super().__init__(f"normal equations singular at lambda={lam}{cond}; use lambda > 0")


class PredictorError(StackingError):
    """A base predictor failed to fit or predict."""

    def __init__(self, model: str, fold: int, cause: Exception):
        self.model = model
        self.fold = fold
        self.cause = cause
        where = "full refit" if fold < 0 else f"fold {fold}"
        super().__init__(f"predictor '{model}' failed on {where}: {cause}")


class SolverError(StackingError):
    """Meta-learner fit failed inside a cross-validation fold."""

    def __init__(self, kind: str, fold: int, cause: Exception):
        self.kind = kind
        self.fold = fold
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", StackingError.exit_code)
        super().__init__(f"{kind} meta-learner failed on outer fold {fold}: {cause}")


class StageError(StackingError):
    """Wraps any error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", StackingError.exit_code)
        super().__init__(f"[{stage}] {cause}")
