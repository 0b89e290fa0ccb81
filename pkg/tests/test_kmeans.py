"""
test_kmeans.py

Tests for the k-means bootstrap clustering.
"""

import unittest
from unittest.mock import patch

import numpy as np

import src.kmeans
from src.errors import ConsistencyError, DuplicatePointId, EmptyInput, InvalidParameter
from src.kmeans import KMeansConfig, kmeans_fit
from src.store import Point
from tests.support import gaussian_blobs


def _points(rows):
    return [Point.of(i, row) for i, row in enumerate(rows)]


class TestKMeansFit(unittest.TestCase):
    """Test kmeans_fit."""

    def test_two_pairs(self):
        """Test that two well-separated pairs end up in separate clusters."""
        partition = kmeans_fit(_points([(0, 0), (0, 1), (10, 10), (10, 11)]), KMeansConfig(k=2))
        groups = sorted(partition.members(index) for index in range(2))
        self.assertEqual(groups, [[0, 1], [2, 3]])
        self.assertAlmostEqual(partition.sse, 1.0)

    def test_single_point(self):
        """Test a single point with k=1."""
        partition = kmeans_fit(_points([(5, 5)]), KMeansConfig(k=1))
        np.testing.assert_array_equal(partition.centroids[0], [5, 5])
        self.assertEqual(partition.sse, 0.0)

    def test_k_equals_point_count(self):
        """Test that k equal to the number of distinct points gives singletons."""
        rows = [(0, 0), (1, 5), (3, 2), (7, 7), (9, 1)]
        partition = kmeans_fit(_points(rows), KMeansConfig(k=5, rng_seed=3))
        self.assertEqual(sorted(len(partition.members(i)) for i in range(5)), [1] * 5)
        self.assertEqual(partition.sse, 0.0)

    def test_identical_points_leave_no_empty_cluster(self):
        """Test that coinciding points still fill every cluster."""
        partition = kmeans_fit(_points([(1, 1)] * 4), KMeansConfig(k=3))
        self.assertTrue(all(partition.members(i) for i in range(3)))
        self.assertEqual(partition.sse, 0.0)

    def test_deterministic(self):
        """Test that the same seed gives the same partition."""
        points = gaussian_blobs([(0, 0), (4, 4), (8, 0)], 30, 1.5, seed=11)
        first = kmeans_fit(points, KMeansConfig(k=3, rng_seed=5))
        second = kmeans_fit(points, KMeansConfig(k=3, rng_seed=5))
        self.assertEqual(first.assignments, second.assignments)
        self.assertEqual(first.sse, second.sse)
        for a, b in zip(first.centroids, second.centroids):
            np.testing.assert_array_equal(a, b)

    def test_sse_never_increases(self):
        """Test that the recorded SSE is non-increasing."""
        points = gaussian_blobs([(0, 0, 0), (3, 3, 3), (6, 0, 3), (0, 6, 0)], 40, 2.0, seed=2)
        partition = kmeans_fit(points, KMeansConfig(k=4, rng_seed=1))
        history = partition.sse_history
        self.assertGreaterEqual(len(history), 1)
        for before, after in zip(history, history[1:]):
            self.assertLessEqual(after, before + 1e-9 * max(1.0, before))

    def test_sse_increase_is_an_error(self):
        """Test that an SSE increase between iterations raises instead of passing silently."""
        real_assign = src.kmeans._assign
        calls: list[None] = []

        def inflating(data, centroids):
            labels, d2 = real_assign(data, centroids)
            calls.append(None)
            return labels, d2 * 1000.0 ** len(calls)

        config = KMeansConfig(k=2, max_iterations=5, convergence_tol=0.0)
        with patch("src.kmeans._assign", side_effect=inflating):
            with self.assertRaises(ConsistencyError):
                kmeans_fit(_points([(0, 0), (0, 1), (10, 10), (10, 11)]), config)

    def test_every_point_assigned_in_range(self):
        """Test that assignments cover every point with an index below k."""
        points = gaussian_blobs([(0, 0), (5, 5)], 25, 1.0, seed=4)
        partition = kmeans_fit(points, KMeansConfig(k=2))
        self.assertEqual(set(partition.assignments), {p.point_id for p in points})
        self.assertTrue(set(partition.assignments.values()) <= {0, 1})

    def test_too_few_points(self):
        """Test that fewer points than k is an error."""
        with self.assertRaises(EmptyInput):
            kmeans_fit(_points([(0, 0), (1, 1)]), KMeansConfig(k=3))

    def test_duplicate_ids(self):
        """Test that duplicate point ids are rejected."""
        with self.assertRaises(DuplicatePointId):
            kmeans_fit([Point.of(1, [0.0]), Point.of(1, [2.0])], KMeansConfig(k=1))

    def test_invalid_config(self):
        """Test that invalid settings are rejected."""
        with self.assertRaises(InvalidParameter):
            KMeansConfig(k=0)
        with self.assertRaises(InvalidParameter):
            KMeansConfig(k=2, max_iterations=0)
        with self.assertRaises(InvalidParameter):
            KMeansConfig(k=2, convergence_tol=-1.0)


if __name__ == "__main__":
    unittest.main()
