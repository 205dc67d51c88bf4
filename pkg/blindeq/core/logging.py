import logging
import sys
import time
import uuid
from collections.abc import Iterator
from contextlib import contextmanager

from blindeq.core.config import settings


class ColoredFormatter(logging.Formatter):
    """Custom formatter with colors for console output."""

    COLORS = {
        "DEBUG": "\033[36m",     # Cyan
        "INFO": "\033[32m",      # Green
        "WARNING": "\033[33m",   # Yellow
        "ERROR": "\033[31m",     # Red
        "CRITICAL": "\033[35m",  # Magenta
    }
    RESET = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelname, self.RESET)
        record = logging.makeLogRecord(record.__dict__)
        record.levelname = f"{color}{record.levelname}{self.RESET}"
        return super().format(record)


def setup_logging(level: str | None = None) -> None:
    """Configure package logging. Everything goes to stderr; stdout belongs to summaries."""
    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)

    # Use colored formatter in development on a terminal
    if settings.ENVIRONMENT == "development" and sys.stderr.isatty():
        formatter: logging.Formatter = ColoredFormatter(settings.LOG_FORMAT)
    else:
        formatter = logging.Formatter(settings.LOG_FORMAT)

    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # Reduce noise from third-party libraries
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)
    logging.getLogger("asyncio").setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the given name."""
    return logging.getLogger(name)


@contextmanager
def log_point(logger: logging.Logger, label: str) -> Iterator[str]:
    """Log start, finish and failure of one unit of experiment work with its wall time."""
    point_id = str(uuid.uuid4())[:8]
    start_time = time.perf_counter()
    logger.info(f"[{point_id}] {label} - Started")
    try:
        yield point_id
    except Exception as e:
        elapsed = (time.perf_counter() - start_time) * 1000
        logger.error(f"[{point_id}] {label} - Error after {elapsed:.2f}ms: {e}")
        raise
    elapsed = (time.perf_counter() - start_time) * 1000
    logger.info(f"[{point_id}] {label} - Done ({elapsed:.2f}ms)")
