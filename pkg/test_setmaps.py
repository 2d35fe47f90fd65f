"""
Unit tests for set maps: rules, equivariance, vertical norms, asymptotic additivity,
realization, membership, relative additivity, the dichotomy and stitching
"""

import math
import unittest

import numpy as np

from modules.group_core import FiniteSubset, InvariancePair, box, box_schedule, geometric_schedule, interval
from modules.representation import (diagonal_representation, identity_representation, quotient_seminorm,
                                    rotation_representation)
from modules.setmaps import (AdditiveMap, AdditiveSequenceMap, AffineSet, BoundaryPerturbedMap, CustomMap,
                             FiniteSet, Subspace, additive_inverse, asymptotic_distance, build_gap_problem,
                             check_equivariance, combine, custom_constant, custom_sin_log, custom_sqrt_correction,
                             dichotomy_classify, eval, is_additive_on, minimize_gap, realization_set_membership,
                             realize, residual_series, setmap_from_dict, stitch, subset_to_json, target_set_from_dict,
                             test_asymptotically_additive, test_relative_aa, vert_G, vert_sup)
from utils.errors import ConfigurationError, PreconditionError, SetMapEvaluationError


class TestSetMapRules(unittest.TestCase):
    """Evaluation of the built-in rules"""

    def setUp(self):
        self.identity = identity_representation(2)
        self.v = np.array([1.0, 2.0])
        self.u = np.array([0.5, -0.5])

    def test_additive(self):
        phi = AdditiveMap(self.identity, self.v)
        np.testing.assert_allclose(eval(phi, interval(0, 4)), 4 * self.v)
        np.testing.assert_allclose(additive_inverse(phi), self.v)

    def test_boundary_perturbed_on_intervals(self):
        phi = BoundaryPerturbedMap(self.identity, self.v, self.u, FiniteSubset.of([0, 1]))
        for n in (1, 5, 30):
            np.testing.assert_allclose(eval(phi, interval(0, n)), n * self.v + self.u)

    def test_boundary_perturbed_counts_boundary(self):
        phi = BoundaryPerturbedMap(self.identity, self.v, self.u, FiniteSubset.of([1]))
        np.testing.assert_allclose(eval(phi, box(1, 10)), 21 * self.v + 2 * self.u)

    def test_boundary_perturbed_sums_a_moving_perturbation(self):
        rep = diagonal_representation([1.0, -1.0])
        phi = BoundaryPerturbedMap(rep, [1.0, 3.0], [0.0, 1.0], FiniteSubset.of([1]))
        # the boundary {-10, 11} carries u and pi(1)u, which cancel; |KF Δ F| u would be (0, 2)
        np.testing.assert_allclose(eval(phi, box(1, 10)), [21.0, 3.0], atol=1e-12)

    def test_boundary_perturbed_dimension_check(self):
        with self.assertRaises(ConfigurationError):
            BoundaryPerturbedMap(self.identity, self.v, self.u, FiniteSubset.of([(0, 1)]))

    def test_additive_sequence(self):
        phi = AdditiveSequenceMap.converging(self.identity, self.v, self.u)
        np.testing.assert_allclose(eval(phi, interval(0, 10)), 10 * self.v + self.u)

    def test_combination(self):
        phi = combine([AdditiveMap(self.identity, self.v), custom_constant(self.identity, self.u)], [2.0, -1.0])
        np.testing.assert_allclose(eval(phi, interval(0, 3)), 6 * self.v - self.u)
        self.assertIsNone(phi.bound)

    def test_combination_needs_one_representation(self):
        with self.assertRaises(ConfigurationError):
            combine([AdditiveMap(self.identity, self.v),
                     AdditiveMap(identity_representation(3), np.ones(3))], [1.0, 1.0])

    def test_custom_sqrt_and_sin_log(self):
        rep = identity_representation(1)
        sqrt_map = custom_sqrt_correction(rep, [2.0], [1.0])
        np.testing.assert_allclose(eval(sqrt_map, interval(0, 16)), [36.0])
        sin_map = custom_sin_log(rep, [1.0])
        np.testing.assert_allclose(eval(sin_map, interval(0, 1)), [0.0], atol=1e-15)

    def test_failing_evaluator_is_wrapped(self):
        phi = CustomMap(self.identity, lambda F: 1 / 0)
        F = interval(0, 3)
        with self.assertRaises(SetMapEvaluationError) as ctx:
            eval(phi, F)
        self.assertEqual(ctx.exception.subset, F)

    def test_wrong_output_shape(self):
        phi = CustomMap(self.identity, lambda F: np.ones(3))
        with self.assertRaises(TypeError):
            eval(phi, interval(0, 2))

    def test_is_additive_on(self):
        E, F = interval(0, 3), interval(3, 7)
        self.assertTrue(is_additive_on(AdditiveMap(self.identity, self.v), E, F))
        self.assertFalse(is_additive_on(custom_constant(self.identity, self.v), E, F))
        with self.assertRaises(ConfigurationError):
            is_additive_on(AdditiveMap(self.identity, self.v), interval(0, 3), interval(2, 4))

    def test_dict_round_trip(self):
        phi = BoundaryPerturbedMap(self.identity, self.v, self.u, FiniteSubset.of([0, 1]))
        data = phi.to_dict()
        self.assertEqual(data, {'rule': 'boundary_perturbed', 'v': [1.0, 2.0], 'u': [0.5, -0.5], 'K': [0, 1]})
        restored = setmap_from_dict(data, self.identity)
        np.testing.assert_allclose(eval(restored, interval(0, 9)), eval(phi, interval(0, 9)))

    def test_from_dict_errors(self):
        with self.assertRaises(ConfigurationError):
            setmap_from_dict({'rule': 'additive'}, self.identity)
        with self.assertRaises(ConfigurationError):
            setmap_from_dict({'rule': 'mystery'}, self.identity)
        with self.assertRaises(ConfigurationError):
            setmap_from_dict({'rule': 'custom', 'kind': 'mystery'}, self.identity)

    def test_subset_json(self):
        self.assertEqual(subset_to_json(FiniteSubset.of([2, 0])), [0, 2])
        self.assertEqual(subset_to_json(FiniteSubset.of([(1, 0)])), [[1, 0]])


class TestSemiNorms(unittest.TestCase):
    """Equivariance checks, vertical norms and asymptotic distance"""

    def setUp(self):
        self.rotation = rotation_representation(2 * math.pi / 5)

    def test_additive_is_equivariant(self):
        report = check_equivariance(AdditiveMap(self.rotation, [1.0, 0.0]), seed=3)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.max_defect, 1e-9)

    def test_boundary_perturbed_is_equivariant(self):
        phi = BoundaryPerturbedMap(self.rotation, [1.0, 0.0], [0.0, 1.0], FiniteSubset.of([0, 2]))
        self.assertTrue(check_equivariance(phi, seed=5).passed)

    def test_constant_is_not_equivariant(self):
        report = check_equivariance(custom_constant(self.rotation, [1.0, 0.0]), seed=3)
        self.assertFalse(report.passed)
        self.assertIsNotNone(report.worst_shift)
        self.assertEqual(report.to_dict()['samples'], 32)

    def test_vert_sup_of_additive(self):
        phi = AdditiveMap(identity_representation(2), [3.0, 4.0])
        self.assertAlmostEqual(vert_sup(phi, box_schedule(1, 1, 10), seed=0), 5.0, places=12)

    def test_vert_G_of_rotation(self):
        report = vert_G(AdditiveMap(self.rotation, [1.0, 0.0]), box_schedule(1))
        self.assertLess(report.tail_sup, 0.02)

    def test_vert_G_is_below_vert_sup(self):
        identity = identity_representation(2)
        maps = [
            AdditiveMap(self.rotation, [1.0, 0.0]),
            BoundaryPerturbedMap(identity, [1.0, 1.0], [0.3, 0.4], FiniteSubset.of([1])),
            custom_constant(self.rotation, [1.0, 0.0]),
            AdditiveSequenceMap.converging(identity, [1.0, 1.0], [2.0, -1.0]),
        ]
        schedule = box_schedule(1, 2, 40)
        for phi in maps:
            self.assertLessEqual(vert_G(phi, schedule).tail_sup, vert_sup(phi, schedule, seed=0) + 1e-12)

    def test_asymptotic_distance_of_boundary_perturbation(self):
        rep = identity_representation(2)
        u = np.array([0.3, 0.4])
        phi = AdditiveMap(rep, [1.0, 1.0])
        psi = BoundaryPerturbedMap(rep, [1.0, 1.0], u, FiniteSubset.of([1]))
        report = asymptotic_distance(phi, psi, box_schedule(1))
        self.assertLessEqual(report.tail_sup, 2 * 0.5 / 99 + 1e-12)
        self.assertAlmostEqual(report.limit_estimate, 0.0, delta=1e-3)


class TestAsymptoticAdditivity(unittest.TestCase):
    """The minimised gap decides asymptotic additivity"""

    def test_additive_has_zero_gap(self):
        rep = rotation_representation(2 * math.pi / 5)
        result = test_asymptotically_additive(AdditiveMap(rep, [1.0, 0.5]), box_schedule(1))
        self.assertTrue(result.is_additive)
        self.assertLessEqual(result.gap, 1e-9)
        self.assertEqual(result.status, 'target reached')

    def test_sqrt_correction(self):
        rep = identity_representation(1)
        phi = custom_sqrt_correction(rep, [2.0], [1.0])
        result = test_asymptotically_additive(phi, box_schedule(1), tol=0.01)
        self.assertTrue(result.is_additive)
        self.assertLess(result.gap, 0.0068)
        self.assertAlmostEqual(float(result.v[0]), 2.094, delta=0.01)
        self.assertFalse(test_asymptotically_additive(phi, box_schedule(1), tol=1e-3).is_additive)

    def test_sin_log_is_not_additive(self):
        phi = custom_sin_log(identity_representation(1), [1.0])
        result = test_asymptotically_additive(phi, geometric_schedule(range(2, 15)), tol=1e-3)
        self.assertFalse(result.is_additive)
        self.assertGreater(result.gap, 0.5)


class TestRealization(unittest.TestCase):
    """Additive realizations and the realization set"""

    def test_boundary_perturbed_identity(self):
        rep = identity_representation(2)
        v, u = np.array([1.0, -2.0]), np.array([0.3, 0.4])
        phi = BoundaryPerturbedMap(rep, v, u, FiniteSubset.of([1]))
        result = realize(phi, box_schedule(1))
        self.assertLessEqual(quotient_seminorm(rep, result.coboundary, result.v - v), 1e-6)
        self.assertLessEqual(result.residual_estimate, 2 * (2 * 0.5) / 99)
        self.assertLess(result.gap, 2e-3)
        self.assertTrue(all(d <= bound for _, _, d, bound in result.cauchy_checks))

    def test_boundary_perturbed_reflection(self):
        rep = diagonal_representation([1.0, -1.0])
        v, u = np.array([1.0, 3.0]), np.array([0.3, 0.4])
        phi = BoundaryPerturbedMap(rep, v, u, FiniteSubset.of([1]))
        result = realize(phi, box_schedule(1))
        self.assertLessEqual(quotient_seminorm(rep, result.coboundary, result.v - v), 1e-6)
        # the realization is reported orthogonal to the coboundaries
        self.assertAlmostEqual(float(result.v[1]), 0.0, places=9)
        self.assertLessEqual(result.residual_estimate, (2 * 0.5 + 3.0) / 99)

    def test_boundary_perturbed_on_the_plane(self):
        rep = identity_representation(2, dimension=2)
        v, u = np.array([1.0, -2.0]), np.array([0.5, 0.5])
        # |KF Δ F| = 2s - 1 on boxes of side s
        phi = BoundaryPerturbedMap(rep, v, u, FiniteSubset.of([(0, 0), (1, 1)]))
        result = realize(phi, box_schedule(2))
        self.assertEqual(result.candidate, 'extrapolated')
        np.testing.assert_allclose(result.v, v, atol=1e-9)
        self.assertLessEqual(result.residual_estimate, 2 * np.linalg.norm(u) / 21 + 1e-12)

    def test_rotation_realizes_to_zero(self):
        rep = rotation_representation(2 * math.pi / 5)
        result = realize(AdditiveMap(rep, [1.0, 0.5]), box_schedule(1))
        np.testing.assert_allclose(result.v, [0.0, 0.0], atol=1e-9)
        self.assertEqual(result.coboundary.rank, 2)

    def test_converging_sequence(self):
        rep = identity_representation(2)
        phi = AdditiveSequenceMap.converging(rep, [1.0, 1.0], [2.0, -1.0])
        result = realize(phi, box_schedule(1))
        np.testing.assert_allclose(result.v, [1.0, 1.0], atol=1e-6)

    def test_not_additive_is_precondition_failure(self):
        phi = custom_sin_log(identity_representation(1), [1.0])
        with self.assertRaises(PreconditionError) as ctx:
            realize(phi, geometric_schedule(range(2, 15)))
        self.assertGreater(ctx.exception.gap, 0.5)
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_bad_epsilons(self):
        phi = AdditiveMap(identity_representation(1), [1.0])
        with self.assertRaises(ConfigurationError):
            realize(phi, box_schedule(1), eps_schedule=[])
        with self.assertRaises(ConfigurationError):
            realize(phi, box_schedule(1), eps_schedule=[0.5, 0.0])

    def test_membership(self):
        rep = diagonal_representation([1.0, -1.0])
        v = np.array([1.0, 1.0])
        phi = AdditiveMap(rep, v)
        schedule = box_schedule(1)
        result = realize(phi, schedule)
        w = np.array([0.0, 2.0])
        shifted = v + (w - rep.act((1,), w))
        self.assertTrue(realization_set_membership(phi, shifted, schedule, result=result).is_member)
        self.assertTrue(realization_set_membership(phi, result.v, schedule, result=result).is_member)

    def test_realization_set_is_convex(self):
        rep = diagonal_representation([1.0, -1.0])
        v = np.array([1.0, 1.0])
        phi = AdditiveMap(rep, v)
        schedule = box_schedule(1)
        result = realize(phi, schedule)
        members = [v + (w - rep.act((1,), w)) for w in (np.array([0.0, 2.0]), np.array([3.0, -1.5]))]
        for s in (0.0, 0.25, 0.5, 0.9, 1.0):
            mixed = s * members[0] + (1 - s) * members[1]
            self.assertTrue(realization_set_membership(phi, mixed, schedule, result=result).is_member)

    def test_non_member(self):
        rep = identity_representation(2)
        v = np.array([1.0, 1.0])
        phi = AdditiveMap(rep, v)
        schedule = box_schedule(1)
        membership = realization_set_membership(phi, v + np.array([1.0, 0.0]), schedule)
        self.assertFalse(membership.is_member)
        self.assertAlmostEqual(membership.quotient_distance, 1.0, places=6)
        self.assertFalse(membership.residual_member)
        self.assertTrue(membership.agrees)


class TestGapMinimisation(unittest.TestCase):
    """The min-max gap over a schedule and the residual series of a candidate"""

    def setUp(self):
        self.v = np.array([1.0, 2.0])
        self.phi = AdditiveMap(identity_representation(2), self.v)
        self.schedule = box_schedule(1, 2, 20)

    def test_additive_map_is_solved_from_zero(self):
        problem = build_gap_problem(self.phi, self.schedule)
        self.assertEqual(problem.norm_name, 'euclidean')
        self.assertAlmostEqual(problem.objective(np.zeros(2)), math.sqrt(5), places=12)
        trace = minimize_gap(problem, np.zeros(2))
        self.assertLessEqual(trace.gap, 1e-9)
        self.assertTrue(trace.converged)
        self.assertEqual(trace.status, 'target reached')
        np.testing.assert_allclose(trace.coordinates, self.v, atol=1e-9)
        self.assertEqual(trace.first_below(0.5)[0], trace.path[-1][0])

    def test_start_at_the_solution(self):
        trace = minimize_gap(build_gap_problem(self.phi, self.schedule), self.v)
        self.assertEqual(trace.iterations, 0)
        self.assertEqual(trace.status, 'target reached')
        self.assertEqual(len(trace.path), 1)

    def test_residual_series(self):
        exact = residual_series(self.phi, self.v, self.schedule)
        self.assertAlmostEqual(exact.tail_sup, 0.0, places=12)
        off = residual_series(self.phi, np.array([1.0, 0.0]), self.schedule)
        self.assertAlmostEqual(off.tail_sup, 2.0, places=12)
        self.assertAlmostEqual(off.limit_estimate, 2.0, places=9)


class TestRelativeAdditivity(unittest.TestCase):
    """Relative asymptotic additivity and the dichotomy"""

    def setUp(self):
        self.identity = identity_representation(2)
        self.e1 = Subspace(np.array([[1.0, 0.0]]))

    def test_inside_the_line(self):
        result = test_relative_aa(AdditiveMap(self.identity, [3.0, 0.0]), self.e1, box_schedule(1))
        self.assertTrue(result.is_relative)
        np.testing.assert_allclose(result.w, [3.0, 0.0], atol=1e-9)

    def test_off_the_line(self):
        result = test_relative_aa(AdditiveMap(self.identity, [0.0, 1.0]), self.e1, box_schedule(1))
        self.assertFalse(result.is_relative)
        self.assertAlmostEqual(result.gap, 1.0, places=6)

    def test_finite_and_affine_targets(self):
        phi = AdditiveMap(self.identity, [3.0, 1.0])
        finite = test_relative_aa(phi, FiniteSet(np.array([[0.0, 0.0], [3.0, 1.0]])), box_schedule(1))
        self.assertTrue(finite.is_relative)
        np.testing.assert_allclose(finite.w, [3.0, 1.0])
        affine = test_relative_aa(phi, AffineSet(np.array([0.0, 1.0]), np.array([[1.0, 0.0]])), box_schedule(1))
        self.assertTrue(affine.is_relative)
        np.testing.assert_allclose(affine.w, [3.0, 1.0], atol=1e-6)

    def test_target_set_parsing(self):
        W = target_set_from_dict({'type': 'subspace', 'basis': [[1, 0]]})
        self.assertIsInstance(W, Subspace)
        self.assertEqual(W.to_dict(), {'type': 'subspace', 'basis': [[1.0, 0.0]]})
        with self.assertRaises(ConfigurationError):
            target_set_from_dict({'type': 'ball'})
        with self.assertRaises(ConfigurationError):
            test_relative_aa(AdditiveMap(self.identity, [1.0, 0.0]), Subspace(np.array([[1.0, 0.0, 0.0]])),
                             box_schedule(1))

    def test_dichotomy_on_the_plane(self):
        rep = diagonal_representation([1.0, -1.0])
        result = dichotomy_classify(AdditiveMap(rep, [2.0, 5.0]), np.array([[1.0, 1.0]]), box_schedule(1))
        self.assertEqual(result.outcome, 'B1')
        np.testing.assert_allclose(result.w, [2.0, 2.0], atol=1e-6)
        self.assertFalse(result.inconsistent)
        self.assertLessEqual(result.relative.limit_estimate, 1e-3)

    def test_dichotomy_matches_rank_membership(self):
        cases = [
            ([1.0, -1.0], [[1.0, 1.0]], [2.0, 2.0]),
            ([1.0, 1.0, -1.0], [[1.0, 0.0, 0.0]], [2.0, 0.0, 0.0]),
            ([1.0, 1.0], [[1.0, 2.0]], [-1.0, -2.0]),
            ([1.0, -1.0, -1.0], [[1.0, 0.0, 0.0]], [3.0, 0.0, 0.0]),
            ([1.0, -1.0], [[1.0, 1.0]], [2.0, 5.0]),
            ([1.0, 1.0, -1.0], [[1.0, 0.0, 0.0]], [2.0, 0.0, 1.0]),
            ([1.0, -1.0, -1.0], [[1.0, 1.0, 0.0]], [1.0, 4.0, -2.0]),
            ([1.0, -1.0], [[1.0, 0.0]], [-1.0, 3.0]),
            ([1.0, 1.0, -1.0], [[1.0, 0.0, 0.0]], [2.0, 1.0, 0.0]),
            ([1.0, 1.0], [[1.0, 0.0]], [0.0, 1.0]),
            ([1.0, -1.0], [[0.0, 1.0]], [1.0, 0.0]),
            ([1.0, -1.0, -1.0], [[0.0, 1.0, 0.0]], [1.0, 0.0, 0.0]),
        ]
        for entries, basis, v in cases:
            rep = diagonal_representation(entries)
            spanning = np.vstack([np.array(basis), (np.eye(len(entries)) - np.diag(entries)).T])
            inside = (np.linalg.matrix_rank(np.vstack([spanning, v]), tol=1e-9)
                      == np.linalg.matrix_rank(spanning, tol=1e-9))
            result = dichotomy_classify(AdditiveMap(rep, v), np.array(basis), box_schedule(1), max_iter=2000)
            self.assertEqual(result.outcome, 'B1' if inside else 'out-of-hypothesis', msg=f"{entries} {basis} {v}")
            self.assertFalse(result.inconsistent)

    def test_dichotomy_out_of_hypothesis(self):
        result = dichotomy_classify(AdditiveMap(self.identity, [0.0, 1.0]), self.e1, box_schedule(1))
        self.assertEqual(result.outcome, 'out-of-hypothesis')
        self.assertIsNone(result.w)

    def test_dichotomy_in_three_dimensions(self):
        rep = diagonal_representation([1.0, 1.0, -1.0])
        W = Subspace(np.array([[1.0, 0.0, 0.0]]))
        schedule = box_schedule(1, 8, 128, step=8)

        inside = dichotomy_classify(AdditiveMap(rep, [2.0, 0.0, 0.0]), W, schedule)
        self.assertEqual(inside.outcome, 'B1')
        np.testing.assert_allclose(inside.w, [2.0, 0.0, 0.0], atol=1e-6)

        # differs from W by a coboundary only
        shifted = dichotomy_classify(AdditiveMap(rep, [2.0, 0.0, 1.0]), W, schedule)
        self.assertEqual(shifted.outcome, 'B1')
        np.testing.assert_allclose(shifted.w, [2.0, 0.0, 0.0], atol=1e-6)

        outside = dichotomy_classify(AdditiveMap(rep, [2.0, 1.0, 0.0]), W, schedule)
        self.assertEqual(outside.outcome, 'out-of-hypothesis')
        self.assertGreater(outside.relative.gap, 0.5)


class TestStitching(unittest.TestCase):
    """Set maps glued along invariance levels"""

    def setUp(self):
        self.rep = identity_representation(1)
        self.levels = 9
        self.vectors = [np.array([sum(2.0 ** (-k - 1) for k in range(n))]) for n in range(self.levels)]
        K = FiniteSubset.of([0, 1])
        self.pairs = [InvariancePair(K, 2.0 ** -n) for n in range(self.levels)]
        self.phi = stitch([AdditiveMap(self.rep, v) for v in self.vectors], self.pairs)

    def test_levels(self):
        self.assertEqual(self.phi.level(interval(0, 1)), 0)
        self.assertEqual(self.phi.level(interval(0, 4)), 2)
        self.assertEqual(self.phi.level(interval(0, 1000)), self.levels - 1)

    def test_normalised_values_approach_pieces(self):
        for n0 in range(1, self.levels):
            for m in range(1, 600, 7):
                F = interval(0, m)
                if self.phi.level(F) < n0:
                    continue
                value = eval(self.phi, F) / F.size
                self.assertLessEqual(float(np.abs(value - self.vectors[n0]).max()), 2.0 ** (-n0 + 2))

    def test_stitched_map_is_equivariant(self):
        rotation = rotation_representation(2 * math.pi / 5)
        pieces = [AdditiveMap(rotation, [1.0 + n, 0.0]) for n in range(3)]
        phi = stitch(pieces, self.pairs[:3])
        self.assertTrue(check_equivariance(phi, seed=1).passed)

    def test_pairs_must_increase(self):
        K = FiniteSubset.of([0, 1])
        with self.assertRaises(ConfigurationError):
            stitch([AdditiveMap(self.rep, [0.0])] * 2, [InvariancePair(K, 0.1), InvariancePair(K, 0.1)])
        with self.assertRaises(ConfigurationError):
            stitch([AdditiveMap(self.rep, [0.0])], self.pairs[:2])


if __name__ == '__main__':
    # Create a test suite
    test_suite = unittest.TestSuite()

    # Add all test classes
    test_classes = [
        TestSetMapRules,
        TestSemiNorms,
        TestAsymptoticAdditivity,
        TestRealization,
        TestGapMinimisation,
        TestRelativeAdditivity,
        TestStitching,
    ]

    for test_class in test_classes:
        tests = unittest.TestLoader().loadTestsFromTestCase(test_class)
        test_suite.addTests(tests)

    # Run the tests
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(test_suite)

    # Print summary
    print(f"\n{'=' * 50}")
    print("TEST SUMMARY")
    print(f"{'=' * 50}")
    print(f"Tests run: {result.testsRun}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")
