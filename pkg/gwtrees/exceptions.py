"""
Provides domain-specific exceptions with exit code mapping for consistent
error handling across the operations, reports and command layers.
"""
from typing import Any


class GWTreesException(Exception):
    """
    Base exception for all errors.

    All custom exceptions should inherit from this class to enable
    centralized exception handling in the command layer.
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        """
        Initialize the exception.

        Args:
            message: Human-readable error message
            details: Optional additional context about the error
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ValidationException(GWTreesException):
    """
    Raised when an input violates the precondition of an operation.

    Maps to exit code 2 (usage error).
    """
    pass


class InvalidDistributionException(ValidationException):
    """
    Raised when an offspring or displacement specification is unusable.

    Examples:
        - Unknown distribution name
        - Negative or non-numeric custom weights
        - Displacement law with nonzero mean or phi(t) = 1 for some 0 < |t| <= pi
    """
    pass


class NonCriticalDistributionException(InvalidDistributionException):
    """Raised when a custom offspring law does not have mean 1."""

    def __init__(self, mean: float, details: dict[str, Any] | None = None):
        self.mean = mean
        message = f"Offspring law must be critical (mean 1), got mean {mean:.12g}"
        super().__init__(message, details)


class SpanMismatchException(ValidationException):
    """Raised when no tree of size n exists for the offspring law."""

    def __init__(self, n: int, span: int, details: dict[str, Any] | None = None):
        self.n = n
        self.span = span
        message = f"No tree of size {n} exists: n must be 1 mod span {span}"
        super().__init__(message, details)


class BallotViolationException(ValidationException):
    """
    Raised when a degree sequence is not a valid Lukasiewicz word.

    Examples:
        - A proper prefix of (deg - 1) sums to -1
        - The total of (deg - 1) is not -1
    """
    pass


class InvalidVertexException(ValidationException):
    """Raised when a vertex id does not belong to the tree."""

    def __init__(self, vertex: int, n: int, details: dict[str, Any] | None = None):
        self.vertex = vertex
        self.n = n
        message = f"Vertex {vertex} is not in a tree with {n} vertices"
        super().__init__(message, details)


class OutOfDomainException(ValidationException):
    """Raised when an evaluation point lies outside the supported domain."""
    pass


class SizeGuardException(ValidationException):
    """Raised when an exhaustive or quadratic operation is asked for too large an n."""

    def __init__(self, operation: str, n: int, limit: int, details: dict[str, Any] | None = None):
        self.operation = operation
        self.n = n
        self.limit = limit
        message = f"{operation} supports n <= {limit}, got n = {n}"
        super().__init__(message, details)


class SamplingException(GWTreesException):
    """
    Raised when a random sampler cannot produce a sample.

    Maps to exit code 1.
    """
    pass


class RejectionLimitException(SamplingException):
    """Raised when the conditioned sampler exceeds its attempt cap."""

    def __init__(self, n: int, attempts: int, details: dict[str, Any] | None = None):
        self.n = n
        self.attempts = attempts
        message = f"No degree sequence summing to {n - 1} after {attempts} attempts"
        super().__init__(message, details)


class TreeTruncatedException(SamplingException):
    """
    Raised when an unconditioned tree outgrows the size cap.

    Callers treat the sample as censored.
    """

    def __init__(self, size_cap: int, details: dict[str, Any] | None = None):
        self.size_cap = size_cap
        message = f"Galton-Watson tree exceeded size cap {size_cap}"
        super().__init__(message, details)


class VerificationFailedException(GWTreesException):
    """
    Raised when a verification suite violates a stated tolerance.

    Maps to exit code 1. The failure record names the check, the observed
    value, the tolerance and the source anchor.
    """

    def __init__(
        self,
        check: str,
        observed: float,
        tolerance: float,
        anchor: str,
        details: dict[str, Any] | None = None,
    ):
        self.check = check
        self.observed = observed
        self.tolerance = tolerance
        self.anchor = anchor
        message = f"Check {check} ({anchor}) failed: observed {observed:.6g}, tolerance {tolerance:.6g}"
        super().__init__(message, details)

    def record(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "anchor": self.anchor,
            "observed": self.observed,
            "tolerance": self.tolerance,
            "details": self.details,
        }
