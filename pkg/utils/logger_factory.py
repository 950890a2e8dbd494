# logger_factory.py

import logging
import os
import sys

import colorlog

from config.settings import settings

LOG_DIR = settings.LOG_PATH
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def get_formatter(color: bool = True) -> logging.Formatter:
    if not color:
        return logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    return colorlog.ColoredFormatter(
        "%(log_color)s" + LOG_FORMAT,
        datefmt=DATE_FORMAT,
        reset=True,
        log_colors={
            "DEBUG": "white,bg_black",
            "INFO": "cyan",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "bold_red,bg_white",
        },
    )


def trim_log_file(log_file: str = settings.LOG_FILE, max_size: int = settings.LOG_MAX_BYTES) -> None:
    """Keep only the newest max_size bytes of LOG_DIR/log_file."""
    path = os.path.join(LOG_DIR, log_file)
    try:
        if os.path.getsize(path) <= max_size:
            return
        with open(path, "rb") as f:
            f.seek(-max_size, os.SEEK_END)
            tail = f.read()
        with open(path, "wb") as f:
            f.write(tail)
    except FileNotFoundError:
        return
    except OSError as e:
        print(f"Failed to trim log file {path}: {e}", file=sys.stderr)


def setup_logger(name: str, log_file: str = settings.LOG_FILE, level: str | int | None = None) -> logging.Logger:
    """
    Logger with a stderr handler (colored on a terminal) and, when LOG_TO_FILE is set, a
    plain-text file handler. stdout stays free for command output.
    """
    logger = logging.getLogger(name)
    logger.setLevel(level or settings.LOG_LEVEL)

    if logger.hasHandlers():
        return logger  # avoid duplicate handlers on reload

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(get_formatter(color=sys.stderr.isatty()))
    logger.addHandler(stream_handler)

    if settings.LOG_TO_FILE:
        try:
            os.makedirs(LOG_DIR, exist_ok=True)
            trim_log_file(log_file, settings.LOG_MAX_BYTES)
            file_handler = logging.FileHandler(os.path.join(LOG_DIR, log_file), mode="a", encoding="utf-8")
            file_handler.setFormatter(get_formatter(color=False))
            logger.addHandler(file_handler)
        except OSError as e:
            logger.warning(f"⚠️ File logging disabled: {e}")

    logger.propagate = False
    return logger
