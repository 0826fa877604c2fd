from typing import Any, Dict, List, Optional, Tuple


class CvAucError(Exception):
    """Base class for every error raised by cvauc"""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{key}={value}" for key, value in self.context.items())
        return f"{self.message} ({details})"


class InvalidInputError(CvAucError, ValueError):
    """Arguments or data that violate a documented precondition"""


class NumericalFailureError(CvAucError, ArithmeticError):
    """A fit or a kernel evaluation that cannot produce a finite result"""


class CoverageError(CvAucError):
    """CVKM pairs that never share a testing fold under the strict policy"""

    def __init__(
        self,
        message: str,
        zero_pairs: int,
        worst_pair: Tuple[int, int],
        suggested_m: int,
        context: Optional[Dict[str, Any]] = None
    ):
        context = dict(context or {})
        context.update(zero_pairs=zero_pairs, worst_pair=worst_pair, suggested_m=suggested_m)
        super().__init__(message, context)
        self.zero_pairs = zero_pairs
        self.worst_pair = worst_pair
        self.suggested_m = suggested_m


class TrialFailureAbort(NumericalFailureError):
    """Too many Monte-Carlo trials failed numerically"""

    def __init__(self, failed: int, attempted: int, first_errors: List[str]):
        super().__init__(
            "Trial failure rate above the configured limit",
            {"failed": failed, "attempted": attempted}
        )
        self.failed = failed
        self.attempted = attempted
        self.first_errors = list(first_errors)
