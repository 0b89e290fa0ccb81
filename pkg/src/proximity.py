"""
proximity.py

The Inverse Proximity Estimate (IPE) of a point to a cluster.

IPE = ED(m, y) + ED(q, y) * ED(m, q), where q is the member of Q nearest to y.
The bias term grows when y is far from the cluster's boundary on its side and
when that boundary already sits far from the mean, so sparse sides stay open
while gaps next to dense regions are penalized.
"""

from __future__ import annotations

from collections.abc import Iterable
from typing import NamedTuple

from .cf import ClusterFeature, FarPoint
from .errors import ConsistencyError
from .vecmath import Vector, check_dimension, euclidean

__all__ = ["ProximityResult", "vicinity_farthest", "ipe", "rank_clusters"]


class ProximityResult(NamedTuple):
    cluster_id: int
    ipe: float
    ed_to_mean: float
    bias: float
    q_used: int


def vicinity_farthest(cf: ClusterFeature, y: Vector) -> FarPoint:
    """
    The element of cf.q nearest to y, ties toward the lower point id.
    """
    if not cf.q:
        raise ConsistencyError(f"Cluster {cf.cluster_id} has no farthest points.")
    return min(cf.q, key=lambda far: (euclidean(far.vector, y), far.point_id))


def ipe(cf: ClusterFeature, y: Vector) -> ProximityResult:
    """
    Evaluate the IPE of y against cf, using the snapshot mean m that Q was taken from.
    """
    check_dimension(cf.m, y)
    q = vicinity_farthest(cf, y)
    ed_to_mean = euclidean(cf.m, y)
    bias = euclidean(q.vector, y) * euclidean(cf.m, q.vector)
    return ProximityResult(cf.cluster_id, ed_to_mean + bias, ed_to_mean, bias, q.point_id)


def rank_clusters(clusters: Iterable[ClusterFeature], y: Vector) -> list[ProximityResult]:
    """
    IPE of y against every cluster, best first; equal IPEs order by cluster id.
    """
    return sorted((ipe(cf, y) for cf in clusters), key=lambda result: (result.ipe, result.cluster_id))
