# utils/decorators.py
import sys
import time
import traceback
from contextlib import contextmanager
from functools import wraps

from errors.exceptions import StackingError, StageError
from utils.logger_factory import setup_logger

logger = setup_logger(__name__)


def handle_exceptions(func):
    """
    Decorator that logs unexpected errors with their traceback and re-raises.
    Engine errors (StackingError) pass through untouched; they already carry context.
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except StackingError:
            raise
        except Exception as e:
            logger.error(f"unexpected error in {func.__qualname__}! {e}")
            logger.error(traceback.format_exc())
            raise
    return wrapper


def exit_on_error(func):
    """
    For CLI commands: turn a StackingError into a one-line diagnostic on stderr and its
    exit code. Anything else is a bug and exits 3 after the traceback is logged.
    """
    @wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except StackingError as e:
            print(f"error: {e}", file=sys.stderr)
            logger.debug(traceback.format_exc())
            return e.exit_code
        except Exception as e:
            logger.error(f"❌ {func.__name__} crashed: {e}")
            logger.error(traceback.format_exc())
            print(f"error: internal failure: {e}", file=sys.stderr)
            return 3
    return wrapper


@contextmanager
def pipeline_stage(name: str, timings: dict[str, float] | None = None):
    """
    Time a pipeline stage and annotate anything it raises with the stage name.
    Elapsed seconds are accumulated into `timings[name]` when a dict is given.
    """
    start = time.perf_counter()
    logger.info(f"▶️ [{name}] started")
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error(f"❌ [{name}] failed: {e}")
        raise StageError(name, e) from e
    finally:
        elapsed = time.perf_counter() - start
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + elapsed
    logger.info(f"✅ [{name}] done in {elapsed:.3f}s")
