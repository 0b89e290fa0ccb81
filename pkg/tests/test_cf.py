"""
test_cf.py

Tests for cluster features and their algebra.
"""

import unittest

import numpy as np

from src.cf import (
    ClusterFeature,
    DriftMode,
    FarPoint,
    HyperParams,
    cf_build,
    cf_insert,
    cf_merge,
    cf_refresh,
    cf_singleton,
    cf_variance,
    drift_deviation,
    merge_cost,
)
from src.errors import ConsistencyError, DimensionMismatch, EmptyInput, InvalidParameter
from src.store import Point
from src.vecmath import as_vector, euclidean


def _points(rows, first_id=0):
    return [Point.of(first_id + i, row) for i, row in enumerate(rows)]


class TestHyperParams(unittest.TestCase):
    """Test hyperparameter validation."""

    def test_defaults(self):
        """Test the documented defaults."""
        params = HyperParams(k=3)
        self.assertEqual((params.p, params.lambda_, params.theta, params.delta), (5, 10.0, 4.0, 0.1))
        self.assertIs(params.drift_mode, DriftMode.PER_POINT)

    def test_rejects_out_of_range(self):
        """Test that non-positive or non-finite values are rejected."""
        for kwargs in ({"k": 0}, {"k": 2, "p": 0}, {"k": 2, "lambda_": 0}, {"k": 2, "theta": -1.0}):
            with self.subTest(kwargs=kwargs), self.assertRaises(InvalidParameter):
                HyperParams(**kwargs)
        with self.assertRaises(InvalidParameter):
            HyperParams(k=2, delta=float("nan"))

    def test_drift_mode_from_text(self):
        """Test that the drift mode accepts its text form."""
        self.assertIs(HyperParams(k=1, drift_mode="per-chunk").drift_mode, DriftMode.PER_CHUNK)


class TestBuild(unittest.TestCase):
    """Test cf_build and cf_singleton."""

    def test_pair(self):
        """Test a two-point cluster where both points tie on distance."""
        cf = cf_build(0, _points([(0, 0), (2, 0)]), p=1)
        self.assertEqual(cf.n, 2)
        np.testing.assert_array_equal(cf.m, [1, 0])
        np.testing.assert_array_equal(cf.m_new, [1, 0])
        np.testing.assert_array_equal(cf.ss, [4, 0])
        self.assertEqual([far.point_id for far in cf.q], [0])

    def test_singleton_member(self):
        """Test that Q never holds more than n points."""
        cf = cf_build(0, _points([(3, 4)]), p=3)
        self.assertEqual(cf.n, 1)
        np.testing.assert_array_equal(cf.ss, [9, 16])
        self.assertEqual(len(cf.q), 1)
        np.testing.assert_array_equal(cf.q[0].vector, [3, 4])

    def test_farthest_points_match_sort(self):
        """Test Q against an exhaustive sort of distances to the mean."""
        rng = np.random.default_rng(8)
        for _ in range(20):
            members = _points(rng.normal(size=(10, 3)))
            cf = cf_build(0, members, p=4)
            mean = np.mean([p.features for p in members], axis=0)
            expected = sorted(members, key=lambda p: -np.linalg.norm(p.features - mean))[:4]
            self.assertEqual([far.point_id for far in cf.q], [p.point_id for p in expected])

    def test_q_descending(self):
        """Test that Q is ordered by descending distance from m."""
        cf = cf_build(0, _points([(0, 0), (1, 0), (5, 0), (-3, 0), (2, 0)]), p=3)
        distances = [float(np.linalg.norm(far.vector - cf.m)) for far in cf.q]
        self.assertEqual(distances, sorted(distances, reverse=True))

    def test_empty(self):
        """Test that a cluster cannot be built from nothing."""
        with self.assertRaises(EmptyInput):
            cf_build(0, [], p=2)

    def test_singleton(self):
        """Test the singleton cluster feature."""
        cf = cf_singleton(4, Point.of(9, [0, 0]))
        self.assertEqual((cf.cluster_id, cf.n), (4, 1))
        np.testing.assert_array_equal(cf.m, [0, 0])
        np.testing.assert_array_equal(cf.ss, [0, 0])
        self.assertEqual([far.point_id for far in cf.q], [9])
        np.testing.assert_array_equal(cf_singleton(0, Point.of(0, [3, 4])).ss, [9, 16])
        self.assertEqual(cf_variance(cf_singleton(0, Point.of(0, [3, 4]))), 0.0)


class TestInsert(unittest.TestCase):
    """Test cf_insert."""

    def test_hand_arithmetic(self):
        """Test one insertion against hand arithmetic."""
        cf = cf_insert(cf_singleton(0, Point.of(0, [0, 0])), Point.of(1, [2, 2]))
        self.assertEqual(cf.n, 2)
        np.testing.assert_array_equal(cf.m_new, [1, 1])
        np.testing.assert_array_equal(cf.ss, [4, 4])
        np.testing.assert_array_equal(cf.m, [0, 0])
        self.assertEqual([far.point_id for far in cf.q], [0])

    def test_insert_at_mean(self):
        """Test that inserting the mean leaves the mean unchanged."""
        cf = cf_build(0, _points([(0, 0), (2, 4)]), p=2)
        updated = cf_insert(cf, Point.of(5, [1, 2]))
        np.testing.assert_array_equal(updated.m_new, cf.m_new)
        self.assertEqual(updated.n, 3)

    def test_dimension_mismatch(self):
        """Test that a point of the wrong dimension is rejected."""
        with self.assertRaises(DimensionMismatch):
            cf_insert(cf_singleton(0, Point.of(0, [0, 0])), Point.of(1, [1, 2, 3]))

    def test_incremental_matches_batch(self):
        """Test randomized insertion sequences against a batch rebuild."""
        rng = np.random.default_rng(20)
        for _ in range(1000):
            d = int(rng.integers(1, 9))
            n = int(rng.integers(1, 201))
            members = _points(rng.normal(loc=rng.uniform(-5, 5), scale=rng.uniform(0.1, 3), size=(n, d)))
            cf = cf_singleton(0, members[0])
            for point in members[1:]:
                cf = cf_insert(cf, point)
            batch = cf_build(0, members, p=5)
            self.assertEqual(cf.n, batch.n)
            np.testing.assert_allclose(cf.m_new, batch.m_new, rtol=1e-9, atol=1e-9)
            np.testing.assert_allclose(cf.ss, batch.ss, rtol=1e-9, atol=1e-9)


class TestVariance(unittest.TestCase):
    """Test cf_variance."""

    def test_pair(self):
        """Test the two-point example."""
        self.assertAlmostEqual(cf_variance(cf_build(0, _points([(0, 0), (2, 0)]), p=1)), 1.0)

    def test_matches_population_variance(self):
        """Test against the population variance summed over components."""
        rng = np.random.default_rng(3)
        data = rng.normal(size=(40, 3))
        cf = cf_build(0, _points(data), p=2)
        self.assertAlmostEqual(cf_variance(cf), float(np.sum(np.var(data, axis=0))), places=9)

    def test_corrupt_feature(self):
        """Test that a clearly negative variance is reported as corruption."""
        zero = as_vector([0.0, 0.0])
        cf = ClusterFeature(0, 1, as_vector([1.0, 0.0]), as_vector([1.0, 0.0]), (FarPoint(0, zero),), zero)
        with self.assertRaises(ConsistencyError):
            cf_variance(cf)


class TestMerge(unittest.TestCase):
    """Test cf_merge and merge_cost."""

    def test_two_singletons(self):
        """Test merging two singletons."""
        a = cf_singleton(0, Point.of(0, [0, 0]))
        b = cf_singleton(1, Point.of(1, [2, 0]))
        merged = cf_merge(a, b, p=2, cluster_id=7)
        self.assertEqual((merged.cluster_id, merged.n), (7, 2))
        np.testing.assert_array_equal(merged.m, [1, 0])
        np.testing.assert_array_equal(merged.m_new, [1, 0])
        np.testing.assert_array_equal(merged.ss, [4, 0])
        self.assertEqual(sorted(far.point_id for far in merged.q), [0, 1])
        self.assertEqual(merge_cost(a, b), 2.0)

    def test_equal_means(self):
        """Test that clusters with equal means merge at zero cost onto that mean."""
        a = cf_build(0, _points([(0, 0), (2, 2)]), p=2)
        b = cf_build(1, _points([(1, 1)], first_id=2), p=2)
        self.assertEqual(merge_cost(a, b), 0.0)
        np.testing.assert_array_equal(cf_merge(a, b, p=2, cluster_id=2).m, [1, 1])

    def test_q_drawn_from_inputs(self):
        """Test that the merged Q only holds points from the input Qs."""
        a = cf_build(0, _points([(0, 0), (1, 0), (2, 0), (3, 0)]), p=2)
        b = cf_build(1, _points([(10, 0), (11, 0), (12, 0)], first_id=4), p=2)
        merged = cf_merge(a, b, p=3, cluster_id=2)
        allowed = {far.point_id for far in (*a.q, *b.q)}
        self.assertTrue({far.point_id for far in merged.q} <= allowed)
        self.assertEqual(len(merged.q), 3)

    def test_merged_q_on_random_pairs(self):
        """Test that the merged Q is drawn from both input Qs and ranked by distance to the merged mean."""
        rng = np.random.default_rng(31)
        for _ in range(300):
            d, p = int(rng.integers(1, 6)), int(rng.integers(1, 7))
            rows_a = rng.normal(size=(int(rng.integers(1, 25)), d))
            rows_b = rng.normal(loc=rng.uniform(-4, 4, size=d), size=(int(rng.integers(1, 25)), d))
            a = cf_build(0, _points(rows_a), p)
            b = cf_build(1, _points(rows_b, first_id=len(rows_a)), p)
            merged = cf_merge(a, b, p, cluster_id=2)

            pool = {far.point_id: far.vector for far in (*a.q, *b.q)}
            kept = [far.point_id for far in merged.q]
            self.assertTrue(set(kept) <= set(pool))
            self.assertEqual(len(kept), len(set(kept)))
            self.assertEqual(len(kept), min(p, a.n + b.n))
            distances = [euclidean(far.vector, merged.m) for far in merged.q]
            self.assertEqual(distances, sorted(distances, reverse=True))
            dropped = [euclidean(vector, merged.m) for point_id, vector in pool.items() if point_id not in kept]
            if dropped:
                self.assertLessEqual(max(dropped), distances[-1])

    def test_cost_equals_variance_increase(self):
        """Test merge_cost against the increase in total within-cluster SSE."""
        rng = np.random.default_rng(30)
        for _ in range(500):
            d = int(rng.integers(1, 6))
            rows_a = rng.normal(size=(int(rng.integers(1, 30)), d))
            rows_b = rng.normal(loc=rng.uniform(-4, 4, size=d), size=(int(rng.integers(1, 30)), d))
            a = cf_build(0, _points(rows_a), p=3)
            b = cf_build(1, _points(rows_b, first_id=len(rows_a)), p=3)
            union = cf_build(2, _points(np.vstack([rows_a, rows_b])), p=3)
            expected = union.n * cf_variance(union) - a.n * cf_variance(a) - b.n * cf_variance(b)
            scale = float(np.sum(union.ss))
            self.assertAlmostEqual(merge_cost(a, b), expected, delta=1e-9 * max(1.0, scale))

    def test_dimension_mismatch(self):
        """Test that clusters of different dimension cannot merge."""
        with self.assertRaises(DimensionMismatch):
            cf_merge(cf_singleton(0, Point.of(0, [0])), cf_singleton(1, Point.of(1, [0, 0])), p=2, cluster_id=2)


class TestDrift(unittest.TestCase):
    """Test drift_deviation and cf_refresh."""

    def _feature(self, m, m_new):
        m, m_new = as_vector(m), as_vector(m_new)
        return ClusterFeature(0, 2, m, m_new, (FarPoint(0, m),), as_vector(np.square(m_new) * 2))

    def test_no_drift(self):
        """Test that a fresh cluster has not drifted."""
        self.assertEqual(drift_deviation(cf_build(0, _points([(3, 4), (5, 6)]), p=2)).value, 0.0)
        self.assertEqual(drift_deviation(self._feature([1, 1], [1, 1])).value, 0.0)

    def test_relative(self):
        """Test the relative deviation of the mean."""
        deviation = drift_deviation(self._feature([3, 4], [3.3, 4.4]))
        self.assertTrue(deviation.relative)
        self.assertAlmostEqual(deviation.value, 0.1, places=12)

    def test_origin_falls_back_to_absolute(self):
        """Test that a snapshot mean at the origin gives the absolute deviation."""
        deviation = drift_deviation(self._feature([0, 0], [3, 4]))
        self.assertFalse(deviation.relative)
        self.assertEqual(deviation.value, 5.0)

    def test_scaling_leaves_drift_unchanged(self):
        """Test that scaling every coordinate by c > 0 leaves the drift deviation unchanged."""
        rng = np.random.default_rng(12)
        for _ in range(200):
            d = int(rng.integers(1, 6))
            rows = rng.normal(loc=rng.uniform(-5, 5, size=d), size=(int(rng.integers(1, 20)), d))
            extra = rng.normal(loc=rng.uniform(-5, 5, size=d), size=(int(rng.integers(1, 10)), d))
            c = float(rng.uniform(0.1, 50.0))
            deviations = []
            for scale in (1.0, c):
                cf = cf_build(0, _points(rows * scale), p=3)
                for i, row in enumerate(extra * scale):
                    cf = cf_insert(cf, Point.of(100 + i, row))
                deviations.append(drift_deviation(cf))
            plain, scaled = deviations
            self.assertEqual(plain.relative, scaled.relative)
            self.assertAlmostEqual(scaled.value, plain.value, delta=1e-9 * max(1.0, plain.value))

    def test_refresh_after_build_is_identity(self):
        """Test that refreshing a freshly built cluster changes nothing."""
        members = _points([(0, 1), (4, 2), (-1, 3), (2, 2)])
        cf = cf_build(3, members, p=2)
        refreshed = cf_refresh(cf, members, p=2)
        self.assertEqual((refreshed.cluster_id, refreshed.n), (3, 4))
        np.testing.assert_array_equal(refreshed.m, cf.m)
        np.testing.assert_array_equal(refreshed.ss, cf.ss)
        self.assertEqual([f.point_id for f in refreshed.q], [f.point_id for f in cf.q])

    def test_refresh_picks_up_new_far_point(self):
        """Test that a refresh puts a recently added far point into Q."""
        members = _points([(0,), (1,), (2,)])
        cf = cf_build(0, members, p=2)
        self.assertEqual([f.point_id for f in cf.q], [0, 2])
        far = Point.of(3, [10])
        cf = cf_insert(cf, far)
        refreshed = cf_refresh(cf, [*members, far], p=2)
        self.assertIn(3, [f.point_id for f in refreshed.q])
        np.testing.assert_array_equal(refreshed.m, refreshed.m_new)
        self.assertEqual(drift_deviation(refreshed).value, 0.0)

    def test_refresh_count_mismatch(self):
        """Test that a member count different from n is a consistency error."""
        members = _points([(0,), (1,)])
        cf = cf_build(0, members, p=2)
        with self.assertRaises(ConsistencyError):
            cf_refresh(cf, members[:1], p=2)


if __name__ == "__main__":
    unittest.main()
