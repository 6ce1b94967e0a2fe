"""
Displacement laws, vertical profiles and the Psi statistic.
"""
import math
import unittest

import numpy as np
from scipy.integrate import trapezoid

from gwtrees.exceptions import InvalidDistributionException, ValidationException
from gwtrees.operations.labels import (
    characteristic,
    exact_psi,
    fixed_displacement,
    gamma,
    make_displacement,
    min_curvature,
    normalized_profile,
    profile_at,
    psi_estimate,
    psi_sweep,
    vertex_labels,
    vertical_profile,
)
from gwtrees.operations.offspring import make_offspring
from gwtrees.operations.streams import replicate_rng
from gwtrees.operations.trees import from_lukasiewicz, sample_conditioned, single_vertex


class TestDisplacement(unittest.TestCase):
    def test_built_in_laws(self):
        pm1 = make_displacement("pm1")
        self.assertEqual(pm1.support, (-1, 1))
        self.assertAlmostEqual(pm1.variance, 1.0)
        uniform3 = make_displacement("uniform3")
        self.assertAlmostEqual(uniform3.variance, 2 / 3)
        self.assertEqual(make_displacement("uniform_3"), uniform3)

    def test_custom_law(self):
        eta = make_displacement("custom:-2:1,1:2")
        self.assertAlmostEqual(eta.mean, 0.0)
        self.assertAlmostEqual(eta.variance, 2.0)

    def test_nonzero_mean_rejected(self):
        with self.assertRaises(InvalidDistributionException):
            make_displacement("custom:0:0.5,1:0.5")

    def test_span_two_law_admitted(self):
        pm1 = make_displacement("pm1")
        self.assertEqual(int(np.gcd.reduce(np.diff(pm1.support))), 2)
        self.assertAlmostEqual(characteristic(pm1, math.pi), -1.0)
        self.assertGreater(min_curvature(pm1), 0.0)

    def test_periodic_law_rejected(self):
        # phi(t) = cos(2t) equals 1 at t = pi
        with self.assertRaises(InvalidDistributionException):
            make_displacement("custom:-2:0.5,2:0.5")

    def test_malformed_rejected(self):
        with self.assertRaises(InvalidDistributionException):
            make_displacement("custom:1,2")
        with self.assertRaises(InvalidDistributionException):
            make_displacement("gaussian")
        with self.assertRaises(InvalidDistributionException):
            make_displacement("custom:0:1")

    def test_characteristic(self):
        pm1 = make_displacement("pm1")
        self.assertAlmostEqual(characteristic(pm1, 0.0), 1.0)
        self.assertAlmostEqual(characteristic(pm1, math.pi / 2), 0.0)
        values = characteristic(pm1, np.array([0.1, 0.2]))
        np.testing.assert_allclose(values, np.cos([0.1, 0.2]))
        self.assertGreater(min_curvature(pm1), 0.1)

    def test_gamma(self):
        self.assertAlmostEqual(gamma(make_offspring("geometric"), make_displacement("uniform3")), 1.45648, places=5)
        self.assertAlmostEqual(gamma(make_offspring("poisson"), make_displacement("pm1")), 1.0)
        self.assertAlmostEqual(gamma(make_offspring("geometric"), make_displacement("pm1")), 2 ** 0.25)


class TestVerticalProfile(unittest.TestCase):
    """Test label propagation and vertical profiles"""

    def test_single_vertex(self):
        profile = vertical_profile(single_vertex(), make_displacement("pm1"), replicate_rng(1, 0))
        self.assertEqual(profile.as_dict(), {0: 1})

    def test_fixed_steps_follow_depth(self):
        up = fixed_displacement(1)
        cherry = vertical_profile(from_lukasiewicz([2, 0, 0]), up, replicate_rng(1, 0))
        self.assertEqual(cherry.as_dict(), {0: 1, 1: 2})
        path = vertical_profile(from_lukasiewicz([1, 1, 0]), up, replicate_rng(1, 0))
        self.assertEqual(path.as_dict(), {0: 1, 1: 1, 2: 1})
        self.assertEqual(path.count(5), 0)

    def test_labels_accumulate_along_paths(self):
        tree = sample_conditioned(make_offspring("poisson"), 50, replicate_rng(2, 0))
        labels = vertex_labels(tree, fixed_displacement(-2), replicate_rng(2, 1))
        np.testing.assert_array_equal(labels, -2 * tree.depth)

    def test_mass_is_conserved(self):
        eta = make_displacement("uniform3")
        for r in range(5):
            tree = sample_conditioned(make_offspring("geometric"), 80, replicate_rng(3, r))
            profile = vertical_profile(tree, eta, replicate_rng(4, r))
            self.assertEqual(int(profile.counts.sum()), 80)
            self.assertEqual(profile.count(0) >= 1, True)


class TestNormalizedProfile(unittest.TestCase):
    def _profile(self):
        tree = sample_conditioned(make_offspring("geometric"), 200, replicate_rng(5, 0))
        return vertical_profile(tree, make_displacement("uniform3"), replicate_rng(5, 1))

    def test_t2a_integrates_to_one(self):
        profile = self._profile()
        g = gamma(make_offspring("geometric"), make_displacement("uniform3"))
        scale = 200 ** 0.25 / g
        low, high = profile.offset - 2, profile.offset + len(profile.counts) + 2
        # include every integer knot so the trapezoid rule is exact
        x = np.arange(4 * low, 4 * high + 1) / 4 / scale
        density = normalized_profile(profile, g, x)
        self.assertAlmostEqual(trapezoid(density, x), 1.0, places=9)
        self.assertTrue(np.all(density >= 0))

    def test_t2b_integrates_to_one(self):
        profile = self._profile()
        scale = 200 ** 0.25
        low, high = profile.offset - 2, profile.offset + len(profile.counts) + 2
        x = np.arange(4 * low, 4 * high + 1) / 4 / scale
        density = normalized_profile(profile, 1.7, x, form="t2b")
        self.assertAlmostEqual(trapezoid(density, x), 1.0, places=9)

    def test_single_vertex_spike(self):
        profile = vertical_profile(single_vertex(), make_displacement("pm1"), replicate_rng(1, 0))
        values = normalized_profile(profile, 1.0, np.array([-1.0, -0.5, 0.0, 0.5, 1.0]))
        np.testing.assert_allclose(values, [0.0, 0.5, 1.0, 0.5, 0.0])
        self.assertEqual(profile_at(profile, 1.0, 0.0), 1.0)
        self.assertEqual(profile_at(profile, 1.0, 3.0), 0.0)


class TestPsi(unittest.TestCase):
    def test_zero_frequency(self):
        dist, eta = make_offspring("geometric"), make_displacement("pm1")
        estimate = psi_estimate(dist, eta, 30, 0.0, 20, replicate_rng(1, 0))
        self.assertAlmostEqual(estimate.psi, 1.0)
        self.assertAlmostEqual(estimate.stderr, 0.0)
        self.assertAlmostEqual(exact_psi(dist, eta, 30, 0.0), 1.0)

    def test_bounds(self):
        dist, eta = make_offspring("poisson"), make_displacement("uniform3")
        for estimate in psi_sweep(dist, eta, 40, [0.3, 1.0, math.pi], 30, seed=7):
            self.assertGreaterEqual(estimate.psi, 0.0)
            self.assertLessEqual(estimate.psi, 1.0)
            self.assertEqual(estimate.reps, 30)

    def test_sweep_shares_samples(self):
        dist, eta = make_offspring("poisson"), make_displacement("uniform3")
        sweep = psi_sweep(dist, eta, 40, [0.3, 1.0], 25, seed=7)
        single = psi_sweep(dist, eta, 40, [1.0], 25, seed=7)
        self.assertAlmostEqual(sweep[1].psi, single[0].psi)

    def test_monte_carlo_matches_exact(self):
        dist, eta = make_offspring("geometric"), make_displacement("uniform3")
        estimate = psi_estimate(dist, eta, 30, 0.8, 2000, replicate_rng(12, 0))
        exact = exact_psi(dist, eta, 30, 0.8)
        self.assertLess(abs(estimate.psi - exact), 4 * estimate.stderr + 1e-3)

    def test_validation(self):
        dist, eta = make_offspring("geometric"), make_displacement("pm1")
        with self.assertRaises(ValidationException):
            psi_sweep(dist, eta, 10, [4.0], 10, seed=1)
        with self.assertRaises(ValidationException):
            psi_sweep(dist, eta, 10, [1.0], 1, seed=1)
