"""
Provides centralized exception handling for the command line. Converts
domain exceptions to exit codes and writes a machine-readable failure
record to stderr.
"""
import json
import logging
import sys
from typing import Any, Callable, TextIO

from pydantic import ValidationError

from gwtrees.exceptions import (
    GWTreesException,
    SamplingException,
    ValidationException,
    VerificationFailedException,
)

# Configure logger
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _emit(stream: TextIO, record: dict[str, Any]) -> None:
    stream.write(json.dumps(record, default=str) + "\n")


def verification_failed_handler(exc: VerificationFailedException, stream: TextIO) -> int:
    """A suite violated its tolerance: exit 1 with the check, observed value and anchor."""
    logger.warning(f"Verification failed: {exc.message}", extra={"check": exc.check})
    _emit(stream, {"error": "Verification Failed", **exc.record()})
    return EXIT_CHECK_FAILED


def validation_exception_handler(exc: ValidationException, stream: TextIO) -> int:
    """Bad input to an operation: exit 2."""
    logger.warning(f"Validation error: {exc.message}", extra={"details": exc.details})
    _emit(stream, {"error": "Validation Error", "message": exc.message, "details": exc.details})
    return EXIT_USAGE


def config_error_handler(exc: ValidationError, stream: TextIO) -> int:
    """A command-line flag failed RunConfig validation: exit 2."""
    errors = [{"field": ".".join(map(str, e["loc"])), "message": e["msg"]} for e in exc.errors()]
    logger.warning("Invalid command-line flags", extra={"errors": errors})
    _emit(stream, {"error": "Validation Error", "message": "invalid flags", "details": {"errors": errors}})
    return EXIT_USAGE


def sampling_exception_handler(exc: SamplingException, stream: TextIO) -> int:
    """A sampler gave up: exit 1."""
    logger.error(f"Sampling error: {exc.message}", extra={"details": exc.details})
    _emit(stream, {"error": "Sampling Error", "message": exc.message, "details": exc.details})
    return EXIT_CHECK_FAILED


def gwtrees_exception_handler(exc: GWTreesException, stream: TextIO) -> int:
    """Fallback for domain exceptions without a specific handler."""
    logger.error(f"gwtrees error: {exc.message}", extra={"details": exc.details}, exc_info=exc)
    _emit(stream, {"error": "Internal Error", "message": exc.message, "details": exc.details})
    return EXIT_CHECK_FAILED


def generic_exception_handler(exc: Exception, stream: TextIO) -> int:
    """Last resort for anything unexpected."""
    logger.critical(f"Unhandled exception: {exc}", exc_info=exc)
    _emit(stream, {"error": "Internal Error", "message": "An unexpected error occurred", "details": {}})
    return EXIT_CHECK_FAILED


# Most specific first
HANDLERS: list[tuple[type[BaseException], Callable[[Any, TextIO], int]]] = [
    (VerificationFailedException, verification_failed_handler),
    (ValidationException, validation_exception_handler),
    (ValidationError, config_error_handler),
    (SamplingException, sampling_exception_handler),
    (GWTreesException, gwtrees_exception_handler),
    (Exception, generic_exception_handler),
]


def handle_exception(exc: Exception, stream: TextIO | None = None) -> int:
    """Report exc with the first matching handler and return the exit code."""
    stream = sys.stderr if stream is None else stream
    for exc_type, handler in HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc, stream)
    return generic_exception_handler(exc, stream)
