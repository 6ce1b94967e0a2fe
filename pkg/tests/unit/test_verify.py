"""
Verification suites on reduced parameters. The full acceptance sweeps live
in tests/integration and are marked slow.
"""
import math
import unittest

import pydantic

from gwtrees.exceptions import ValidationException
from gwtrees.operations.models import RunConfig
from gwtrees.operations.offspring import make_offspring
from gwtrees.operations.streams import replicate_rng
from gwtrees.operations.trees import from_lukasiewicz, sample_conditioned
from gwtrees.operations.verify import (
    SUITES,
    halves_growth,
    run_suite,
    successive_growth,
    tree_identity_violations,
)


def _config(suite: str, **fields) -> RunConfig:
    return RunConfig(command="verify", suite=suite, seed=12345, **fields)


class TestRunConfig(unittest.TestCase):
    def test_defaults(self):
        config = RunConfig(command="verify")
        self.assertAlmostEqual(config.beta, math.pi / 8)
        self.assertEqual(config.delta, 0.05)
        self.assertEqual(config.grid, 200)
        self.assertEqual(config.model_fields_set, {"command"})

    def test_invalid_values(self):
        for fields in ({"reps": 1}, {"n": [0]}, {"beta": 2.0}, {"delta": 0.0}, {"t": [4.0]}, {"k": -1}):
            with self.assertRaises(pydantic.ValidationError):
                RunConfig(command="verify", **fields)


class TestSuitesThatPass(unittest.TestCase):
    """Deterministic suites pass on small inputs"""

    def test_dwass(self):
        result = run_suite("dwass", _config("dwass", n=[60], lmax=10))
        self.assertTrue(result.passed, result.metrics)
        self.assertEqual(len(result.rows), 4 * 10 * 60)
        self.assertEqual(result.metrics["tolerance"], 1e-12)

    def test_tail(self):
        result = run_suite("tail", _config("tail"))
        self.assertTrue(result.passed, result.metrics)
        self.assertEqual([row[1] for row in result.rows], [2000, 2000, 1999])

    def test_singularity(self):
        result = run_suite("singularity", _config("singularity"))
        self.assertTrue(result.passed, result.metrics)
        self.assertLess(result.metrics["series_agreement"], 1e-8)

    def test_oracle(self):
        result = run_suite("oracle", _config("oracle", n=[7]))
        self.assertTrue(result.passed, result.metrics)
        self.assertLessEqual(result.metrics["max_weight_diff"], 1e-12)

    def test_identities(self):
        result = run_suite("identities", _config("identities", n=[10, 25], reps=5))
        self.assertTrue(result.passed, result.rows)
        # binary trees need odd n
        self.assertEqual(len(result.rows), 2 + 2 + 1)


class TestGrowthChecks(unittest.TestCase):
    """Boundedness sweeps fail on growth only"""

    def test_falling_maximum_is_not_growth(self):
        self.assertEqual(halves_growth([25, 100, 300, 500], [0.41452, 0.40, 0.33106, 0.30], 250), 0.0)

    def test_rising_maximum(self):
        self.assertAlmostEqual(halves_growth([10, 20, 30, 40], [1.0, 1.0, 1.2, 1.1], 20), 0.2)

    def test_missing_half(self):
        self.assertEqual(halves_growth([10, 20], [1.0, 5.0], 50), 0.0)

    def test_successive_growth(self):
        self.assertAlmostEqual(successive_growth([1.0, 1.1, 1.0]), 0.1)
        self.assertLess(successive_growth([2.0, 1.0]), 0.0)
        self.assertEqual(successive_growth([0.0, 1.0]), math.inf)
        self.assertEqual(successive_growth([3.0]), 0.0)

    def test_root_pairs_fall_with_n(self):
        # the largest E Q_k(T_n) / (k sqrt(n)) sits at the smallest n
        result = run_suite("tq", _config("tq", n=[100]))
        self.assertTrue(result.passed, result.metrics)
        self.assertEqual(result.metrics["observed"], 0.0)


class TestSuiteShapes(unittest.TestCase):
    """Sweeps run end to end on reduced parameters"""

    def test_exact_sweeps(self):
        for name in ("theorem1", "tq", "l1b"):
            result = run_suite(name, _config(name, n=[40]))
            self.assertEqual(len(result.rows), 2 * 16)
            self.assertEqual(set(result.metrics["maxima"]), {"geometric", "poisson"})
            self.assertTrue(all(row[2] > 0 for row in result.rows))

    def test_t11(self):
        result = run_suite("t11", _config("t11", n=[30], lmax=5))
        # E Y_{0,0}(T_n) / n = 1
        self.assertTrue(all(row[2] >= 1.0 - 1e-9 for row in result.rows))

    def test_generating_function_bounds(self):
        for name, grid in (("tgen1", 20), ("tgen2", 10)):
            result = run_suite(name, _config(name, n=[21, 41], grid=grid))
            self.assertEqual(len(result.rows), 2)
            maxima = result.metrics["maxima"]["geometric"]
            self.assertEqual(maxima, [row[-1] for row in result.rows])
            self.assertAlmostEqual(result.metrics["observed"], max(maxima) / min(maxima) - 1.0)
            self.assertEqual(result.passed, result.metrics["observed"] < 0.10)
            self.assertIn("geometric", result.metrics["disc_drift"])

    def test_meirmoon(self):
        result = run_suite("meirmoon", _config("meirmoon", n=[301], k=1))
        self.assertEqual(len(result.rows), 2)
        self.assertLess(result.metrics["observed"], 0.2)

    def assertVerdictMatches(self, result, inclusive: bool = False):
        observed, tolerance = result.metrics["observed"], result.metrics["tolerance"]
        self.assertEqual(result.passed, observed <= tolerance if inclusive else observed < tolerance)

    def test_qk(self):
        result = run_suite("qk", _config("qk", k=3, reps=20_000))
        self.assertEqual(len(result.rows), 2)
        self.assertEqual(result.metrics["reps"], 20_000)
        self.assertTrue(all(math.isfinite(row[-1]) for row in result.rows))
        self.assertEqual(result.metrics["tolerance"], 3.0)
        self.assertVerdictMatches(result, inclusive=True)

    def test_monte_carlo_sweeps(self):
        result = run_suite("l0", _config("l0", n=[50, 100], reps=20, t=[0.5, 1.0]))
        self.assertEqual(len(result.rows), 4)
        self.assertEqual(len(result.metrics["maxima"]), 2)
        self.assertVerdictMatches(result)
        result = run_suite("l1a", _config("l1a", n=[50, 100], reps=10))
        self.assertEqual([row[2] for row in result.rows], [7, 10])
        self.assertVerdictMatches(result)

    def test_universality(self):
        result = run_suite("universality", _config("universality", n=[50], reps=30))
        self.assertGreaterEqual(result.metrics["ks_statistic"], 0.0)
        self.assertLessEqual(result.metrics["ks_statistic"], 1.0)
        self.assertEqual(len(result.rows), 2)
        self.assertVerdictMatches(result)

    def test_unknown_suite(self):
        with self.assertRaises(ValidationException):
            run_suite("theorem9", _config("theorem9"))

    def test_every_suite_is_registered(self):
        self.assertEqual(len(SUITES), 16)


class TestTreeIdentities(unittest.TestCase):
    def test_small_trees(self):
        for word in ([0], [2, 0, 0], [1, 1, 0], [3, 1, 0, 0, 2, 0, 0]):
            self.assertEqual(set(tree_identity_violations(from_lukasiewicz(word)).values()), {0})

    def test_random_trees(self):
        dist = make_offspring("geometric")
        for r in range(10):
            tree = sample_conditioned(dist, 35, replicate_rng(6, r))
            self.assertEqual(sum(tree_identity_violations(tree).values()), 0)
