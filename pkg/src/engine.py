"""
engine.py

The incremental clustering loop: bootstrap with k-means, then place each new
point with the IPE, refresh drifted clusters and merge down towards k clusters
after every chunk.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

from .cf import (
    ClusterFeature,
    DriftMode,
    HyperParams,
    cf_build,
    cf_insert,
    cf_merge,
    cf_refresh,
    cf_singleton,
    drift_deviation,
    merge_cost,
)
from .errors import ConsistencyError, DimensionMismatch, DuplicatePointId, EmptyInput, InvalidParameter
from .kmeans import KMeansConfig, kmeans_fit
from .proximity import rank_clusters
from .store import Point, PointStore
from .vecmath import euclidean

__all__ = [
    "Admission",
    "MergeRecord",
    "GateAudit",
    "Model",
    "IngestReport",
    "ProtocolResult",
    "bootstrap",
    "ingest_point",
    "merge_pass",
    "ingest_chunk",
    "run_protocol",
]

logger = logging.getLogger(__name__)


class Admission(NamedTuple):
    point_id: int
    cluster_id: int
    ipe: float
    admitted: bool


class MergeRecord(NamedTuple):
    first: int
    second: int
    merged: int
    distance: float
    cost: float


@dataclass(slots=True)
class GateAudit:
    """
    Records every placement, merge and refresh decision of the model it is attached to.
    """

    lambda_: float
    theta: float
    admissions: list[Admission] = field(default_factory=list[Admission])
    merges: list[MergeRecord] = field(default_factory=list[MergeRecord])
    refreshes: list[int] = field(default_factory=list[int])

    def violations(self) -> list[str]:
        """
        Human readable descriptions of decisions that broke the lambda or theta gate.
        """
        problems: list[str] = []
        for admission in self.admissions:
            if admission.admitted and not admission.ipe < self.lambda_:
                problems.append(f"point {admission.point_id} admitted with IPE {admission.ipe!r}")
        for merge in self.merges:
            if not merge.distance < self.theta:
                problems.append(f"clusters {merge.first}+{merge.second} merged at distance {merge.distance!r}")
        return problems


class ModelCheckpoint(NamedTuple):
    clusters: dict[int, ClusterFeature]
    generation: int
    next_cluster_id: int
    next_point_id: int
    audit_marks: tuple[int, int, int] | None


@dataclass(slots=True)
class Model:
    """
    The live clustering: one ClusterFeature per cluster plus the id counters.
    """

    params: HyperParams
    dimension: int
    clusters: dict[int, ClusterFeature] = field(default_factory=dict[int, ClusterFeature])
    generation: int = 0
    next_cluster_id: int = 0
    next_point_id: int = 0
    audit: GateAudit | None = None

    @property
    def active_count(self) -> int:
        return len(self.clusters)

    @property
    def total_points(self) -> int:
        return sum(cf.n for cf in self.clusters.values())

    def sorted_clusters(self) -> list[ClusterFeature]:
        return [self.clusters[cluster_id] for cluster_id in sorted(self.clusters)]

    def attach_audit(self) -> GateAudit:
        self.audit = GateAudit(self.params.lambda_, self.params.theta)
        return self.audit

    def checkpoint(self) -> ModelCheckpoint:
        marks: tuple[int, int, int] | None = None
        if self.audit is not None:
            marks = (len(self.audit.admissions), len(self.audit.merges), len(self.audit.refreshes))
        return ModelCheckpoint(
            dict(self.clusters), self.generation, self.next_cluster_id, self.next_point_id, marks
        )

    def rollback(self, checkpoint: ModelCheckpoint) -> None:
        self.clusters = dict(checkpoint.clusters)
        self.generation = checkpoint.generation
        self.next_cluster_id = checkpoint.next_cluster_id
        self.next_point_id = checkpoint.next_point_id
        if self.audit is not None and checkpoint.audit_marks is not None:
            admissions, merges, refreshes = checkpoint.audit_marks
            del self.audit.admissions[admissions:]
            del self.audit.merges[merges:]
            del self.audit.refreshes[refreshes:]


@dataclass(slots=True)
class IngestReport:
    points_processed: int = 0
    assigned_existing: int = 0
    singletons_created: int = 0
    merges_performed: int = 0
    refreshes_performed: int = 0
    final_cluster_count: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "points_processed": self.points_processed,
            "assigned_existing": self.assigned_existing,
            "singletons_created": self.singletons_created,
            "merges_performed": self.merges_performed,
            "refreshes_performed": self.refreshes_performed,
            "final_cluster_count": self.final_cluster_count,
        }


def _check_chunk(points: Sequence[Point], dimension: int) -> None:
    for point in points:
        if point.dimension != dimension:
            raise DimensionMismatch(dimension, point.dimension)


def bootstrap(points: Sequence[Point], params: HyperParams, kconfig: KMeansConfig, store: PointStore) -> Model:
    """
    Cluster the initial chunk with k-means and summarize each cluster as a ClusterFeature.

    :param points: The initial chunk.
    :param params: Hyperparameters; params.k must equal kconfig.k.
    :param kconfig: k-means settings.
    :param store: An empty point store that receives every point.
    :return: A model at generation 1 with k clusters.
    """
    if kconfig.k != params.k:
        raise InvalidParameter("k", kconfig.k, f"k-means k must match the model's k={params.k}")
    if len(store):
        raise ConsistencyError("Bootstrap needs an empty point store.")
    if not points:
        raise EmptyInput("Cannot bootstrap from an empty chunk.")
    dimension = points[0].dimension
    _check_chunk(points, dimension)

    partition = kmeans_fit(points, kconfig)
    by_id = {point.point_id: point for point in points}
    model = Model(params=params, dimension=dimension)

    checkpoint = store.checkpoint()
    try:
        for index in range(partition.k):
            members = [by_id[point_id] for point_id in partition.members(index)]
            cluster_id = model.next_cluster_id
            store.register_cluster(cluster_id)
            for point in members:
                store.append_point(point, cluster_id)
            model.clusters[cluster_id] = cf_build(cluster_id, members, params.p)
            model.next_cluster_id += 1
    except Exception:
        store.rollback(checkpoint)
        raise

    model.next_point_id = max(by_id) + 1
    model.generation = 1
    logger.info(
        "[green]Bootstrapped %d clusters from %d points (SSE %.6g).[/green]",
        model.active_count,
        len(points),
        partition.sse,
        extra={"markup": True},
    )
    return model


def _drift_exceeds(model: Model, cf: ClusterFeature) -> bool:
    deviation = drift_deviation(cf)
    if deviation.value <= model.params.delta:
        return False
    logger.debug(
        "Cluster %d drifted by %.6g (%s), refreshing.",
        cf.cluster_id,
        deviation.value,
        "relative" if deviation.relative else "absolute",
    )
    return True


def _refresh_if_drifted(model: Model, cluster_id: int, store: PointStore) -> bool:
    cf = model.clusters[cluster_id]
    if not _drift_exceeds(model, cf):
        return False
    model.clusters[cluster_id] = cf_refresh(cf, store.members_of(cluster_id), model.params.p)
    if model.audit is not None:
        model.audit.refreshes.append(cluster_id)
    return True


def ingest_point(model: Model, y: Point, store: PointStore, report: IngestReport | None = None) -> Model:
    """
    Place y in the cluster with the smallest IPE if it is below lambda, else start a singleton cluster.

    Nothing is written to the model or the store until every step that can fail has passed, so on an
    error both are left as they were.
    """
    if y.dimension != model.dimension:
        raise DimensionMismatch(model.dimension, y.dimension)
    if y.point_id in store:
        raise DuplicatePointId(y.point_id)

    ranked = rank_clusters(model.clusters.values(), y.features)
    best = ranked[0] if ranked else None

    if best is not None and best.ipe < model.params.lambda_:
        cluster_id = best.cluster_id
        updated = cf_insert(model.clusters[cluster_id], y)
        refreshed = model.params.drift_mode is DriftMode.PER_POINT and _drift_exceeds(model, updated)
        if refreshed:
            # y is not stored yet
            members = sorted([*store.members_of(cluster_id), y], key=lambda point: point.point_id)
            updated = cf_refresh(updated, members, model.params.p)
        store.append_point(y, cluster_id)
        model.clusters[cluster_id] = updated
        logger.debug("Point %d joins cluster %d (IPE %.6g).", y.point_id, cluster_id, best.ipe)
        if model.audit is not None:
            model.audit.admissions.append(Admission(y.point_id, cluster_id, best.ipe, True))
            if refreshed:
                model.audit.refreshes.append(cluster_id)
        if report is not None:
            report.assigned_existing += 1
            if refreshed:
                report.refreshes_performed += 1
    else:
        cluster_id = model.next_cluster_id
        store.register_cluster(cluster_id)
        try:
            store.append_point(y, cluster_id)
        except Exception:
            store.retire_cluster(cluster_id)
            raise
        model.clusters[cluster_id] = cf_singleton(cluster_id, y)
        model.next_cluster_id += 1
        logger.debug(
            "Point %d starts cluster %d (best IPE %s).",
            y.point_id,
            cluster_id,
            f"{best.ipe:.6g}" if best is not None else "n/a",
        )
        if model.audit is not None and best is not None:
            model.audit.admissions.append(Admission(y.point_id, best.cluster_id, best.ipe, False))
        if report is not None:
            report.singletons_created += 1

    model.next_point_id = max(model.next_point_id, y.point_id + 1)
    if report is not None:
        report.points_processed += 1
    return model


def merge_pass(model: Model, store: PointStore, report: IngestReport | None = None) -> Model:
    """
    Merge the cheapest cluster pair within theta until k clusters remain or no pair qualifies.

    Centroid distances use the current means. On failure the model and store revert.
    """
    checkpoint = model.checkpoint()
    store_checkpoint = store.checkpoint()
    try:
        while model.active_count > model.params.k:
            best: tuple[float, int, int, float] | None = None
            for first, second in combinations(sorted(model.clusters), 2):
                a, b = model.clusters[first], model.clusters[second]
                distance = euclidean(a.m_new, b.m_new)
                if not distance < model.params.theta:
                    continue
                candidate = (merge_cost(a, b), first, second, distance)
                if best is None or candidate[:3] < best[:3]:
                    best = candidate
            if best is None:
                logger.warning(
                    "No cluster pair is within theta=%g, keeping %d clusters (k=%d).",
                    model.params.theta,
                    model.active_count,
                    model.params.k,
                )
                break

            cost, first, second, distance = best
            merged_id = model.next_cluster_id
            merged = cf_merge(model.clusters[first], model.clusters[second], model.params.p, merged_id)
            store.register_cluster(merged_id)
            store.reassign(first, merged_id)
            store.reassign(second, merged_id)
            del model.clusters[first], model.clusters[second]
            model.clusters[merged_id] = merged
            model.next_cluster_id += 1

            logger.debug(
                "Merged clusters %d and %d into %d (distance %.6g, cost %.6g).",
                first,
                second,
                merged_id,
                distance,
                cost,
            )
            if model.audit is not None:
                model.audit.merges.append(MergeRecord(first, second, merged_id, distance, cost))
            if report is not None:
                report.merges_performed += 1
    except Exception:
        model.rollback(checkpoint)
        store.rollback(store_checkpoint)
        raise
    return model


def ingest_chunk(model: Model, chunk: Sequence[Point], store: PointStore) -> tuple[Model, IngestReport]:
    """
    Ingest a chunk atomically: place every point, refresh, merge, then bump the generation.

    If anything fails the model and store are rolled back to their state before the chunk.
    """
    _check_chunk(chunk, model.dimension)
    report = IngestReport()
    checkpoint = model.checkpoint()
    store_checkpoint = store.checkpoint()
    try:
        touched: set[int] = set()
        for y in chunk:
            ingest_point(model, y, store, report)
            touched.add(store.assignment_of(y.point_id))

        if model.params.drift_mode is DriftMode.PER_CHUNK:
            for cluster_id in sorted(touched & model.clusters.keys()):
                if _refresh_if_drifted(model, cluster_id, store):
                    report.refreshes_performed += 1

        merge_pass(model, store, report)
        if model.total_points != len(store):
            raise ConsistencyError(f"Clusters hold {model.total_points} points but the store has {len(store)}.")
        model.generation += 1
    except Exception:
        logger.error("Chunk ingestion failed, rolling back to generation %d.", checkpoint.generation)
        model.rollback(checkpoint)
        store.rollback(store_checkpoint)
        raise

    report.final_cluster_count = model.active_count
    logger.info(
        "[green]Generation %d: %d points, %d joined, %d new clusters, %d merges, %d refreshes, "
        "%d clusters.[/green]",
        model.generation,
        report.points_processed,
        report.assigned_existing,
        report.singletons_created,
        report.merges_performed,
        report.refreshes_performed,
        report.final_cluster_count,
        extra={"markup": True},
    )
    return model, report


class ProtocolResult(NamedTuple):
    model: Model
    store: PointStore
    reports: list[IngestReport]


def run_protocol(
    chunks: Sequence[Sequence[Point]], params: HyperParams, kconfig: KMeansConfig, *, audit: bool = False
) -> ProtocolResult:
    """
    Bootstrap on the first chunk and ingest the remaining ones in arrival order.
    """
    if not chunks:
        raise EmptyInput("The protocol needs at least one chunk.")
    store = PointStore()
    model = bootstrap(chunks[0], params, kconfig, store)
    if audit:
        model.attach_audit()
    reports: list[IngestReport] = []
    for chunk in chunks[1:]:
        _, report = ingest_chunk(model, chunk, store)
        reports.append(report)
    return ProtocolResult(model, store, reports)
