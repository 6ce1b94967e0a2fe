"""
Tests exception classes and their mapping to exit codes and failure records
in the command-line exception handlers.
"""
import io
import json
import unittest
from unittest.mock import patch

import numpy as np
import pydantic

from gwtrees.exceptions import (
    BallotViolationException,
    GWTreesException,
    InvalidDistributionException,
    InvalidVertexException,
    NonCriticalDistributionException,
    RejectionLimitException,
    SizeGuardException,
    SpanMismatchException,
    TreeTruncatedException,
    ValidationException,
    VerificationFailedException,
)
from gwtrees.middleware.exception_handlers import (
    EXIT_CHECK_FAILED,
    EXIT_USAGE,
    handle_exception,
)
from gwtrees.operations.models import RunConfig
from gwtrees.operations.offspring import OffspringDist, make_offspring
from gwtrees.operations.streams import replicate_rng
from gwtrees.operations.trees import sample_conditioned


class TestCustomExceptions(unittest.TestCase):
    """Test custom exception classes"""

    def test_span_mismatch_message(self):
        """Test SpanMismatchException message"""
        exc = SpanMismatchException(4, 2)
        self.assertEqual(exc.message, "No tree of size 4 exists: n must be 1 mod span 2")
        self.assertEqual(exc.n, 4)
        self.assertEqual(exc.span, 2)
        self.assertIsInstance(exc, ValidationException)

    def test_non_critical_message(self):
        """Test NonCriticalDistributionException message"""
        exc = NonCriticalDistributionException(0.5, details={"spec": "custom:0.5,0.5"})
        self.assertEqual(exc.message, "Offspring law must be critical (mean 1), got mean 0.5")
        self.assertEqual(exc.details["spec"], "custom:0.5,0.5")
        self.assertIsInstance(exc, InvalidDistributionException)

    def test_invalid_vertex_message(self):
        """Test InvalidVertexException message"""
        exc = InvalidVertexException(7, 3)
        self.assertEqual(exc.message, "Vertex 7 is not in a tree with 3 vertices")

    def test_size_guard_message(self):
        """Test SizeGuardException message"""
        exc = SizeGuardException("enumerate_trees", 13, 12)
        self.assertEqual(exc.message, "enumerate_trees supports n <= 12, got n = 13")

    def test_sampling_exceptions(self):
        """Test sampler exception messages"""
        self.assertEqual(
            RejectionLimitException(10, 5).message,
            "No degree sequence summing to 9 after 5 attempts",
        )
        self.assertEqual(TreeTruncatedException(100).size_cap, 100)

    def test_verification_failed_record(self):
        """Test VerificationFailedException failure record"""
        exc = VerificationFailedException("tail", 0.03, 0.01, "P(|T| = n) ~ ...", details={"n": 2000})
        self.assertEqual(
            exc.record(),
            {"check": "tail", "anchor": "P(|T| = n) ~ ...", "observed": 0.03, "tolerance": 0.01, "details": {"n": 2000}},
        )
        self.assertIn("tail", exc.message)

    def test_default_details(self):
        """Test details default to an empty dict"""
        self.assertEqual(GWTreesException("boom").details, {})


class TestOperationsLayerExceptions(unittest.TestCase):
    """Test that operations raise the documented exceptions"""

    @patch.object(OffspringDist, "sample", lambda self, rng, size: np.zeros(size, dtype=np.int64))
    def test_rejection_cap(self):
        with self.assertRaises(RejectionLimitException) as context:
            sample_conditioned(make_offspring("geometric"), 400, replicate_rng(1, 0), rejection_cap=3)
        self.assertEqual(context.exception.attempts, 3)

    def test_invalid_law(self):
        with self.assertRaises(InvalidDistributionException):
            make_offspring("custom:a,b")


class TestExceptionHandlers(unittest.TestCase):
    """Test exit codes and stderr records"""

    def _handle(self, exc: Exception) -> tuple[int, dict]:
        stream = io.StringIO()
        code = handle_exception(exc, stream)
        return code, json.loads(stream.getvalue())

    def test_validation_maps_to_usage(self):
        code, record = self._handle(SpanMismatchException(4, 2))
        self.assertEqual(code, EXIT_USAGE)
        self.assertEqual(record["error"], "Validation Error")

    def test_ballot_violation_maps_to_usage(self):
        code, _ = self._handle(BallotViolationException("bad word"))
        self.assertEqual(code, EXIT_USAGE)

    def test_config_error_maps_to_usage(self):
        try:
            RunConfig(command="verify", reps=1)
        except pydantic.ValidationError as exc:
            code, record = self._handle(exc)
        self.assertEqual(code, EXIT_USAGE)
        self.assertEqual(record["details"]["errors"][0]["field"], "reps")

    def test_verification_failure(self):
        code, record = self._handle(VerificationFailedException("dwass", 1e-9, 1e-12, "anchor"))
        self.assertEqual(code, EXIT_CHECK_FAILED)
        self.assertEqual(record["check"], "dwass")
        self.assertEqual(record["tolerance"], 1e-12)

    def test_sampling_failure(self):
        code, record = self._handle(RejectionLimitException(10, 5))
        self.assertEqual(code, EXIT_CHECK_FAILED)
        self.assertEqual(record["error"], "Sampling Error")

    def test_unexpected_error(self):
        code, record = self._handle(RuntimeError("boom"))
        self.assertEqual(code, EXIT_CHECK_FAILED)
        self.assertEqual(record["message"], "An unexpected error occurred")

    @patch("sys.stderr", new_callable=io.StringIO)
    def test_defaults_to_stderr(self, stderr):
        handle_exception(ValidationException("bad"))
        self.assertIn("Validation Error", stderr.getvalue())
