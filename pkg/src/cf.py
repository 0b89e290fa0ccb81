"""
cf.py

Cluster Features and the algebra over them.

A ClusterFeature summarizes one cluster as {n, m, m_new, Q, SS}:
  n      number of member points
  m      the mean snapshot Q was computed against
  m_new  the running mean, updated on every insertion
  Q      up to p members farthest from m, descending by distance
  SS     component-wise sum of squared member components

Values are immutable, every operation returns a new ClusterFeature.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import NamedTuple

import numpy as np

from .errors import ConsistencyError, DimensionMismatch, EmptyInput, InvalidParameter
from .store import Point
from .vecmath import Vector, check_dimension, euclidean, freeze, mean_of, norm, squared_components

__all__ = [
    "DriftMode",
    "HyperParams",
    "FarPoint",
    "ClusterFeature",
    "DriftDeviation",
    "cf_build",
    "cf_insert",
    "cf_singleton",
    "cf_variance",
    "cf_merge",
    "merge_cost",
    "drift_deviation",
    "cf_refresh",
]

logger = logging.getLogger(__name__)

DEFAULT_P = 5
DEFAULT_LAMBDA = 10.0
DEFAULT_THETA = 4.0
DEFAULT_DELTA = 0.1

# Floating-point slack for negative variances
VARIANCE_TOLERANCE = 1e-9


class DriftMode(StrEnum):
    """
    When the drift test runs: after every insertion, or once per chunk.
    """

    PER_POINT = "per-point"
    PER_CHUNK = "per-chunk"


@dataclass(frozen=True, slots=True)
class HyperParams:
    """
    k: clusters kept by the merge pass, p: farthest points per cluster,
    lambda_: IPE admission threshold, theta: merge gate on centroid distance,
    delta: relative mean deviation that triggers a refresh.
    """

    k: int
    p: int = DEFAULT_P
    lambda_: float = DEFAULT_LAMBDA
    theta: float = DEFAULT_THETA
    delta: float = DEFAULT_DELTA
    drift_mode: DriftMode = DriftMode.PER_POINT

    def __post_init__(self) -> None:
        for name in ("k", "p"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise InvalidParameter(name, value, "must be a positive integer")
        for name in ("lambda_", "theta", "delta"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise InvalidParameter(name.rstrip("_"), value, "must be a positive real")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "drift_mode", DriftMode(self.drift_mode))


class FarPoint(NamedTuple):
    point_id: int
    vector: Vector


@dataclass(frozen=True, slots=True, eq=False)
class ClusterFeature:
    cluster_id: int
    n: int
    m: Vector
    m_new: Vector
    q: tuple[FarPoint, ...]
    ss: Vector

    @property
    def dimension(self) -> int:
        return int(self.m.shape[0])


class DriftDeviation(NamedTuple):
    """
    relative is False when the snapshot mean is the origin and value is the absolute deviation.
    """

    value: float
    relative: bool


def _farthest(candidates: Iterable[FarPoint], centre: Vector, p: int) -> tuple[FarPoint, ...]:
    """
    The p candidates farthest from centre, descending, ties toward the lower point id.
    """
    ranked = sorted(candidates, key=lambda far: (-euclidean(far.vector, centre), far.point_id))
    return tuple(ranked[:p])


def _check_p(p: int) -> None:
    if p < 1:
        raise InvalidParameter("p", p, "must be a positive integer")


def cf_build(cluster_id: int, members: Sequence[Point], p: int) -> ClusterFeature:
    """
    Compute the cluster feature of members from scratch.

    :raises EmptyInput: If members is empty.
    """
    _check_p(p)
    if not members:
        raise EmptyInput(f"Cannot build cluster {cluster_id} from no points.")
    vectors = [point.features for point in members]
    mean = mean_of(vectors)
    ss = freeze(np.sum([squared_components(vector) for vector in vectors], axis=0))
    q = _farthest((FarPoint(point.point_id, point.features) for point in members), mean, p)
    return ClusterFeature(cluster_id, len(members), mean, mean, q, ss)


def cf_singleton(cluster_id: int, y: Point) -> ClusterFeature:
    return ClusterFeature(
        cluster_id, 1, y.features, y.features, (FarPoint(y.point_id, y.features),), squared_components(y.features)
    )


def cf_insert(cf: ClusterFeature, y: Point) -> ClusterFeature:
    """
    Add y to the cluster. m and Q are left alone until the next refresh.
    """
    check_dimension(cf.m_new, y.features)
    n = cf.n + 1
    m_new = freeze((cf.n * cf.m_new + y.features) / n)
    ss = freeze(cf.ss + squared_components(y.features))
    return replace(cf, n=n, m_new=m_new, ss=ss)


def cf_variance(cf: ClusterFeature) -> float:
    """
    Mean squared deviation of the members from the current mean, summed over components.

    :raises ConsistencyError: If the result is negative beyond floating-point slack.
    """
    total = float(np.sum(cf.ss / cf.n - np.square(cf.m_new)))
    if total < -VARIANCE_TOLERANCE:
        raise ConsistencyError(f"Cluster {cf.cluster_id} has negative variance {total!r}.")
    return max(total, 0.0)


def merge_cost(a: ClusterFeature, b: ClusterFeature) -> float:
    """
    Increase in total within-cluster SSE caused by merging a and b (Ward linkage).
    """
    gap = euclidean(a.m_new, b.m_new)
    return (a.n * b.n) / (a.n + b.n) * gap * gap


def cf_merge(a: ClusterFeature, b: ClusterFeature, p: int, cluster_id: int) -> ClusterFeature:
    """
    The cluster feature of the union of a and b under a fresh cluster_id.

    Q is chosen from Q_a and Q_b only, ranked against the merged mean.
    """
    _check_p(p)
    if a.dimension != b.dimension:
        raise DimensionMismatch(a.dimension, b.dimension)
    n = a.n + b.n
    mean = freeze((a.n * a.m_new + b.n * b.m_new) / n)
    q = _farthest((*a.q, *b.q), mean, min(p, n))
    return ClusterFeature(cluster_id, n, mean, mean, q, freeze(a.ss + b.ss))


def drift_deviation(cf: ClusterFeature) -> DriftDeviation:
    """
    How far the running mean moved from the snapshot mean, relative to the snapshot's norm.
    """
    shift = euclidean(cf.m_new, cf.m)
    scale = norm(cf.m)
    if scale == 0:
        return DriftDeviation(shift, relative=False)
    return DriftDeviation(shift / scale, relative=True)


def cf_refresh(cf: ClusterFeature, members: Sequence[Point], p: int) -> ClusterFeature:
    """
    Rebuild cf from its stored members: the snapshot mean catches up and Q is recomputed.

    :raises ConsistencyError: If the member count disagrees with cf.n.
    """
    if len(members) != cf.n:
        raise ConsistencyError(
            f"Cluster {cf.cluster_id} has n={cf.n} but the store holds {len(members)} of its points."
        )
    refreshed = cf_build(cf.cluster_id, members, p)
    logger.debug("Refreshed cluster %d (n=%d).", cf.cluster_id, cf.n)
    return refreshed
