"""
store.py

The point store: every ingested point and the cluster it is currently assigned to.

Cluster refreshes re-read member points from here, everything else works from cluster features.
The store is held in memory; the state file written by snapshot.py is its durability boundary.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

from .errors import ConsistencyError, DimensionMismatch, DuplicatePointId, InvalidParameter, UnknownCluster
from .vecmath import Vector, as_vector

__all__ = ["Point", "PointStore", "StoreCheckpoint"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class Point:
    """
    A single data point. The label is only ever used for evaluation.
    """

    point_id: int
    features: Vector
    label: str | None = None

    def __post_init__(self) -> None:
        if self.point_id < 0:
            raise InvalidParameter("point_id", self.point_id, "must be non-negative")
        object.__setattr__(self, "features", as_vector(self.features))
        if self.label is not None and not self.label.strip():
            object.__setattr__(self, "label", None)

    @classmethod
    def of(cls, point_id: int, values: Any, label: str | None = None) -> Point:
        return cls(point_id, as_vector(values), label)

    @property
    def dimension(self) -> int:
        return int(self.features.shape[0])


@dataclass(slots=True)
class StoreCheckpoint:
    """
    A copy of the store's bookkeeping, used to roll back a failed chunk.
    """

    dimension: int | None
    points: dict[int, Point]
    assignment: dict[int, int]
    members: dict[int, set[int]]


@dataclass(slots=True)
class PointStore:
    """
    Records every point with its cluster assignment and keeps a members index per cluster.
    """

    dimension: int | None = None
    _points: dict[int, Point] = field(default_factory=dict[int, Point])
    _assignment: dict[int, int] = field(default_factory=dict[int, int])
    _members: dict[int, set[int]] = field(default_factory=dict[int, set[int]])

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, point_id: object) -> bool:
        return point_id in self._points

    def has_cluster(self, cluster_id: int) -> bool:
        return cluster_id in self._members

    def cluster_ids(self) -> list[int]:
        return sorted(self._members)

    def cluster_size(self, cluster_id: int) -> int:
        try:
            return len(self._members[cluster_id])
        except KeyError:
            raise UnknownCluster(cluster_id) from None

    def register_cluster(self, cluster_id: int) -> None:
        """
        Make cluster_id a valid assignment target.
        """
        if cluster_id in self._members:
            raise ConsistencyError(f"Cluster ID {cluster_id} is already registered.")
        self._members[cluster_id] = set()

    def retire_cluster(self, cluster_id: int) -> None:
        """
        Remove an empty cluster id.
        """
        members = self._members.get(cluster_id)
        if members is None:
            raise UnknownCluster(cluster_id)
        if members:
            raise ConsistencyError(f"Cluster ID {cluster_id} still has {len(members)} points.")
        del self._members[cluster_id]

    def append_point(self, point: Point, cluster_id: int) -> None:
        """
        Record point as a member of cluster_id.

        :raises DuplicatePointId: If the point id is already stored; the store is unchanged.
        :raises UnknownCluster: If cluster_id is not registered.
        """
        if point.point_id in self._points:
            raise DuplicatePointId(point.point_id)
        if cluster_id not in self._members:
            raise UnknownCluster(cluster_id)
        if self.dimension is None:
            self.dimension = point.dimension
        elif point.dimension != self.dimension:
            raise DimensionMismatch(self.dimension, point.dimension)

        self._points[point.point_id] = point
        self._assignment[point.point_id] = cluster_id
        self._members[cluster_id].add(point.point_id)

    def members_of(self, cluster_id: int) -> list[Point]:
        """
        The points currently assigned to cluster_id, in point id order.
        """
        try:
            member_ids = self._members[cluster_id]
        except KeyError:
            raise UnknownCluster(cluster_id) from None
        return [self._points[point_id] for point_id in sorted(member_ids)]

    def reassign(self, source: int, target: int) -> int:
        """
        Move every member of source into target and retire source.

        :return: The number of points moved.
        """
        if target not in self._members:
            raise UnknownCluster(target)
        try:
            moved = self._members.pop(source)
        except KeyError:
            raise UnknownCluster(source) from None
        for point_id in moved:
            self._assignment[point_id] = target
        self._members[target] |= moved
        logger.debug("Reassigned %d points from cluster %d to %d.", len(moved), source, target)
        return len(moved)

    def assignment_of(self, point_id: int) -> int:
        return self._assignment[point_id]

    def assignments(self) -> dict[int, int]:
        return {point_id: self._assignment[point_id] for point_id in sorted(self._assignment)}

    def labels(self) -> dict[int, str | None]:
        return {point_id: self._points[point_id].label for point_id in sorted(self._points)}

    def records(self) -> Iterator[tuple[Point, int]]:
        """
        Iterate (point, cluster_id) in point id order.
        """
        for point_id in sorted(self._points):
            yield self._points[point_id], self._assignment[point_id]

    def checkpoint(self) -> StoreCheckpoint:
        return StoreCheckpoint(
            self.dimension,
            dict(self._points),
            dict(self._assignment),
            {cluster_id: set(members) for cluster_id, members in self._members.items()},
        )

    def rollback(self, checkpoint: StoreCheckpoint) -> None:
        self.dimension = checkpoint.dimension
        self._points = dict(checkpoint.points)
        self._assignment = dict(checkpoint.assignment)
        self._members = {cluster_id: set(members) for cluster_id, members in checkpoint.members.items()}
