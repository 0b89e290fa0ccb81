"""
evaluation.py

Cluster purity against ground-truth class labels.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import NamedTuple

import numpy as np
from rich.table import Table
from sklearn.metrics.cluster import contingency_matrix

from .errors import EmptyInput, UnlabeledPoints
from .store import PointStore

__all__ = ["ClusterPurity", "PurityReport", "purity", "purity_of_store", "render_table", "render_key_values"]


class ClusterPurity(NamedTuple):
    cluster_id: int
    size: int
    majority_label: str
    majority_count: int


class PurityReport(NamedTuple):
    total_points: int
    per_cluster: list[ClusterPurity]
    purity: float


def purity(assignments: Mapping[int, int], labels: Mapping[int, str | None]) -> PurityReport:
    """
    Fraction of points that belong to the majority class of their cluster.

    Majority ties report the lexicographically smaller class name.

    :param assignments: point id -> cluster id.
    :param labels: point id -> class label.
    :raises UnlabeledPoints: If an assigned point has no label.
    """
    if not assignments:
        raise EmptyInput("Purity needs at least one assigned point.")
    unlabeled = [point_id for point_id in assignments if labels.get(point_id) is None]
    if unlabeled:
        raise UnlabeledPoints(unlabeled)

    point_ids = sorted(assignments)
    clusters_of = np.array([assignments[point_id] for point_id in point_ids])
    classes_of = np.array([labels[point_id] for point_id in point_ids], dtype=str)

    # rows: classes in sorted order, columns: cluster ids in sorted order
    table = contingency_matrix(classes_of, clusters_of)
    classes = np.unique(classes_of)
    cluster_ids = np.unique(clusters_of)

    per_cluster: list[ClusterPurity] = []
    for column, cluster_id in enumerate(cluster_ids):
        counts = table[:, column]
        majority = int(np.argmax(counts))  # first maximum, i.e. the smaller class name
        per_cluster.append(
            ClusterPurity(int(cluster_id), int(counts.sum()), str(classes[majority]), int(counts[majority]))
        )

    total = len(point_ids)
    return PurityReport(total, per_cluster, sum(row.majority_count for row in per_cluster) / total)


def purity_of_store(store: PointStore) -> PurityReport:
    return purity(store.assignments(), store.labels())


def render_table(report: PurityReport) -> Table:
    table = Table(title=f"Purity {report.purity:.4f} over {report.total_points} points")
    table.add_column("Cluster", justify="right")
    table.add_column("Size", justify="right")
    table.add_column("Majority class")
    table.add_column("Majority count", justify="right")
    for row in report.per_cluster:
        table.add_row(str(row.cluster_id), str(row.size), row.majority_label, str(row.majority_count))
    return table


def render_key_values(report: PurityReport) -> list[str]:
    """
    One metric per line, for scripts.
    """
    lines = [
        f"total_points={report.total_points}",
        f"cluster_count={len(report.per_cluster)}",
        f"purity={report.purity!r}",
    ]
    for row in report.per_cluster:
        lines.append(f"cluster.{row.cluster_id}.size={row.size}")
        lines.append(f"cluster.{row.cluster_id}.majority_label={row.majority_label}")
        lines.append(f"cluster.{row.cluster_id}.majority_count={row.majority_count}")
    return lines
