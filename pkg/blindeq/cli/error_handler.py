from collections.abc import Callable
from typing import TypeVar

from pydantic import ValidationError

from blindeq.core.exceptions import (
    BlindEqError,
    ConfigurationError,
    InvalidParameterError,
    NumericalError,
)
from blindeq.core.logging import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

E = TypeVar("E", bound=BaseException)
Handler = Callable[[BaseException], int]

_HANDLERS: list[tuple[type[BaseException], Handler]] = []


def exception_handler(exc_type: type[E]) -> Callable[[Callable[[E], int]], Callable[[E], int]]:
    """Register a handler; handlers are tried in registration order."""

    def register(fn: Callable[[E], int]) -> Callable[[E], int]:
        _HANDLERS.append((exc_type, fn))  # type: ignore[arg-type]
        return fn

    return register


@exception_handler(ConfigurationError)
def configuration_exception_handler(exc: ConfigurationError) -> int:
    """Handle invalid experiment documents."""
    where = f" at line {exc.line}" if exc.line is not None else ""
    logger.error(f"Configuration error{where}: {exc.message}")
    return EXIT_CONFIG


@exception_handler(ValidationError)
def validation_exception_handler(exc: ValidationError) -> int:
    """Handle schema errors that were not mapped to a document line."""
    for error in exc.errors():
        field = ".".join(str(loc) for loc in error["loc"])
        logger.error(f"Validation error: {field}: {error['msg']}")
    return EXIT_CONFIG


@exception_handler(InvalidParameterError)
def invalid_parameter_exception_handler(exc: InvalidParameterError) -> int:
    """Handle precondition violations reachable from user input."""
    logger.error(f"Invalid parameter: {exc.message}")
    return EXIT_CONFIG


@exception_handler(NumericalError)
def numerical_exception_handler(exc: NumericalError) -> int:
    """Handle non-finite results outside the per-point divergence bookkeeping."""
    logger.error(f"Numerical failure: {exc.message} {exc.details or ''}".rstrip())
    return EXIT_NUMERICAL


@exception_handler(BlindEqError)
def blindeq_exception_handler(exc: BlindEqError) -> int:
    """Handle general application errors."""
    logger.error(f"Application error: {exc.message}")
    return EXIT_FAILURE


@exception_handler(OSError)
def os_exception_handler(exc: OSError) -> int:
    """Handle unreadable configs and unwritable output directories."""
    logger.error(f"I/O error: {exc}")
    return EXIT_CONFIG if isinstance(exc, FileNotFoundError) else EXIT_FAILURE


@exception_handler(Exception)
def general_exception_handler(exc: Exception) -> int:
    """Handle unexpected errors."""
    logger.exception(f"Unexpected error: {exc}")
    return EXIT_FAILURE


def handle_exception(exc: BaseException) -> int:
    """Exit code of the first registered handler matching ``exc``."""
    for exc_type, handler in _HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc)
    raise exc


def run_with_handlers(command: Callable[[], int]) -> int:
    try:
        return command()
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception as exc:
        return handle_exception(exc)
