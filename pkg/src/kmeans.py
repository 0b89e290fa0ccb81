"""
kmeans.py

Lloyd's k-means with greedy k-means++ seeding, used once to cluster the initial chunk.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import ConsistencyError, DimensionMismatch, DuplicatePointId, EmptyInput, InvalidParameter
from .store import Point
from .vecmath import Vector, freeze

__all__ = ["KMeansConfig", "Partition", "kmeans_fit"]

logger = logging.getLogger(__name__)

# Relative rounding slack allowed when checking that the SSE never increases
SSE_SLACK = 1e-9


@dataclass(frozen=True, slots=True)
class KMeansConfig:
    k: int
    max_iterations: int = 100
    convergence_tol: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidParameter("k", self.k, "must be at least 1")
        if self.max_iterations < 1:
            raise InvalidParameter("max_iterations", self.max_iterations, "must be at least 1")
        if self.convergence_tol < 0:
            raise InvalidParameter("convergence_tol", self.convergence_tol, "cannot be negative")


@dataclass(frozen=True, slots=True)
class Partition:
    """
    The result of kmeans_fit.

    assignments maps point id to a cluster index in [0, k); sse_history holds the
    SSE measured after every assignment step.
    """

    assignments: dict[int, int]
    centroids: list[Vector]
    sse: float
    iterations: int
    sse_history: tuple[float, ...] = field(default=())

    @property
    def k(self) -> int:
        return len(self.centroids)

    def members(self, index: int) -> list[int]:
        """
        Point ids assigned to cluster index, ascending.
        """
        return sorted(point_id for point_id, label in self.assignments.items() if label == index)


def _squared_distances(
    data: npt.NDArray[np.float64], centroids: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    return np.sum(np.square(data[:, None, :] - centroids[None, :, :]), axis=2)


def _seed(data: npt.NDArray[np.float64], k: int, rng: np.random.Generator) -> npt.NDArray[np.float64]:
    """
    Greedy k-means++ seeding.

    Each round draws a few candidates with probability proportional to their squared
    distance from the nearest seed and keeps the one that lowers the total most.
    """
    n = data.shape[0]
    trials = 2 + int(np.log(k))
    chosen = [int(rng.integers(n))]
    closest = np.sum(np.square(data - data[chosen[0]]), axis=1)
    for _ in range(1, k):
        total = float(closest.sum())
        if total > 0:
            candidates = rng.choice(n, size=trials, p=closest / total)
            d2 = np.stack([np.sum(np.square(data - data[c]), axis=1) for c in candidates])
            potentials = np.minimum(closest, d2).sum(axis=1)
            # argmin keeps the first candidate on ties
            best = int(np.argmin(potentials))
            index = int(candidates[best])
            closest = np.minimum(closest, d2[best])
        else:
            # every point coincides with a seed, take the lowest unused index
            index = next(i for i in range(n) if i not in chosen)
            closest = np.minimum(closest, np.sum(np.square(data - data[index]), axis=1))
        chosen.append(index)
    return data[chosen].copy()


def _assign(
    data: npt.NDArray[np.float64], centroids: npt.NDArray[np.float64]
) -> tuple[npt.NDArray[np.intp], npt.NDArray[np.float64]]:
    """
    Nearest centroid per point, ties toward the lower index (argmin keeps the first).
    """
    d2 = _squared_distances(data, centroids)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(data.shape[0]), labels]


def _repair_empty(
    data: npt.NDArray[np.float64],
    labels: npt.NDArray[np.intp],
    centroids: npt.NDArray[np.float64],
    d2: npt.NDArray[np.float64],
) -> bool:
    """
    Reseed every empty cluster with the point farthest from its centroid, in place.

    :return: Whether anything was repaired.
    """
    k = centroids.shape[0]
    repaired = False
    for index in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[index] > 0:
            continue
        # only points whose cluster would stay non-empty can move
        movable = counts[labels] > 1
        candidates = np.where(movable, d2, -1.0)
        farthest = int(np.argmax(candidates))
        logger.debug("Cluster %d is empty, reseeding with point index %d.", index, farthest)
        labels[farthest] = index
        centroids[index] = data[farthest]
        d2[farthest] = 0.0
        repaired = True
    return repaired


def kmeans_fit(points: Sequence[Point], config: KMeansConfig) -> Partition:
    """
    Cluster points into config.k clusters.

    The run is deterministic for a given config.rng_seed and point order.

    :param points: The initial chunk.
    :param config: k, iteration cap, tolerance and seed.
    :return: A partition with no empty cluster.
    :raises EmptyInput: If there are fewer points than k.
    :raises DuplicatePointId: If two points share an id.
    :raises ConsistencyError: If the SSE ever increases between iterations.
    """
    if len(points) < config.k:
        raise EmptyInput(f"k-means needs at least k={config.k} points, got {len(points)}.")
    seen: set[int] = set()
    for point in points:
        if point.point_id in seen:
            raise DuplicatePointId(point.point_id)
        seen.add(point.point_id)
        if point.dimension != points[0].dimension:
            raise DimensionMismatch(points[0].dimension, point.dimension)

    data = np.vstack([point.features for point in points])
    rng = np.random.default_rng(config.rng_seed)
    centroids = _seed(data, config.k, rng)

    history: list[float] = []
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        labels, d2 = _assign(data, centroids)
        _repair_empty(data, labels, centroids, d2)
        sse = float(d2.sum())
        if history and sse > history[-1] + SSE_SLACK * max(1.0, history[-1]):
            raise ConsistencyError(
                f"k-means SSE increased from {history[-1]!r} to {sse!r} at iteration {iterations}."
            )
        history.append(sse)

        updated = np.vstack([data[labels == index].mean(axis=0) for index in range(config.k)])
        shift = float(np.linalg.norm(updated - centroids))
        centroids = updated
        if shift < config.convergence_tol:
            break

    labels, d2 = _assign(data, centroids)
    # a repair can pull other points closer to the moved centroid, so settle again
    for _ in range(config.k):
        if not _repair_empty(data, labels, centroids, d2):
            break
        labels, d2 = _assign(data, centroids)
    else:
        _repair_empty(data, labels, centroids, d2)

    logger.debug("k-means finished after %d iterations with SSE %r.", iterations, float(d2.sum()))
    return Partition(
        assignments={point.point_id: int(label) for point, label in zip(points, labels)},
        centroids=[freeze(row) for row in centroids],
        sse=float(d2.sum()),
        iterations=iterations,
        sse_history=tuple(history),
    )
