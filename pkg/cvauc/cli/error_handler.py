import sys
from functools import wraps
from typing import Callable

from pydantic import ValidationError

from cvauc.config import settings
from cvauc.exceptions import (
    CoverageError,
    InvalidInputError,
    NumericalFailureError,
    TrialFailureAbort,
)
import logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _validation_messages(exc: ValidationError):
    messages = []
    for error in exc.errors():
        field = ".".join(str(loc) for loc in error["loc"])
        messages.append(f"{field}: {error['msg']}" if field else error["msg"])
    return messages


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (InvalidInputError, CoverageError, ValidationError)):
        return EXIT_INVALID
    if isinstance(exc, NumericalFailureError):
        return EXIT_NUMERICAL
    return EXIT_UNEXPECTED


def report_error(exc: BaseException) -> int:
    """Print a summary of ``exc`` to stderr and return its exit code"""
    code = exit_code_for(exc)
    if isinstance(exc, ValidationError):
        print("Validation error:", file=sys.stderr)
        for message in _validation_messages(exc):
            print(f"  {message}", file=sys.stderr)
    elif isinstance(exc, TrialFailureAbort):
        logger.error(f"Study aborted: {exc}")
        print(f"Error: {exc}", file=sys.stderr)
        for message in exc.first_errors:
            print(f"  {message}", file=sys.stderr)
    elif code != EXIT_UNEXPECTED:
        print(f"Error: {exc}", file=sys.stderr)
    else:
        logger.error(f"Unhandled exception: {exc}", exc_info=True)
        # Never expose internals in production
        if settings.environment == "development":
            print(f"Internal error: {exc!r}", file=sys.stderr)
        else:
            print("Internal error. Re-run with CVAUC_ENVIRONMENT=development for details.", file=sys.stderr)
    return code


def handle_errors(command: Callable[..., int]) -> Callable[..., int]:
    """Map exceptions raised by a command to documented exit codes"""

    @wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            return command(*args, **kwargs)
        except Exception as exc:
            return report_error(exc)

    return wrapper
