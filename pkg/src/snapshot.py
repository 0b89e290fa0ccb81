"""
snapshot.py

Save and load the full clustering state (model plus point store) so chunks can
arrive across separate process runs.

The state file is plain text:

    cfica-state <format version>
    <header JSON: dimension, generation, counters, params>
    clusters <count>
    <one JSON record per cluster>
    points <count>
    <one CSV record per point: point_id,cluster_id,label,f_1,...,f_d>
    checksum sha256 <hex digest of everything above>

Floats are written with Python's shortest round-trip repr, so load(save(x)) is bit-identical.
A file whose format version differs from STATE_FORMAT_VERSION is refused, minor versions included.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from packaging import version

from .cf import ClusterFeature, DriftMode, FarPoint, HyperParams
from .engine import Model
from .errors import CficaError, SnapshotError, SnapshotVersionError
from .store import Point, PointStore
from .vecmath import Vector, as_vector

__all__ = ["STATE_FORMAT_VERSION", "StoreSnapshot", "save_snapshot", "load_snapshot"]

logger = logging.getLogger(__name__)

STATE_FORMAT_VERSION = "1.0"
MAGIC = "cfica-state"


def _floats(vector: Vector) -> list[float]:
    return [float(x) for x in vector.tolist()]


def _cluster_record(cf: ClusterFeature) -> dict[str, Any]:
    # key order is part of the format
    return {
        "cluster_id": cf.cluster_id,
        "n": cf.n,
        "m": _floats(cf.m),
        "m_new": _floats(cf.m_new),
        "q": [{"point_id": far.point_id, "vector": _floats(far.vector)} for far in cf.q],
        "ss": _floats(cf.ss),
    }


def _cluster_from_record(record: dict[str, Any]) -> ClusterFeature:
    return ClusterFeature(
        cluster_id=int(record["cluster_id"]),
        n=int(record["n"]),
        m=as_vector(record["m"]),
        m_new=as_vector(record["m_new"]),
        q=tuple(FarPoint(int(far["point_id"]), as_vector(far["vector"])) for far in record["q"]),
        ss=as_vector(record["ss"]),
    )


@dataclass(slots=True)
class StoreSnapshot:
    """
    Everything a state file holds, between the live objects and the text.
    """

    dimension: int
    params: HyperParams
    generation: int
    next_cluster_id: int
    next_point_id: int
    clusters: list[ClusterFeature]
    points: list[tuple[Point, int]]

    @classmethod
    def capture(cls, model: Model, store: PointStore) -> StoreSnapshot:
        return cls(
            dimension=model.dimension,
            params=model.params,
            generation=model.generation,
            next_cluster_id=model.next_cluster_id,
            next_point_id=model.next_point_id,
            clusters=model.sorted_clusters(),
            points=list(store.records()),
        )

    def validate(self) -> None:
        """
        Check referential integrity and that member counts match each cluster's n.
        """
        sizes = {cf.cluster_id: 0 for cf in self.clusters}
        if len(sizes) != len(self.clusters):
            raise SnapshotError("clusters", "duplicate cluster ids")
        for cf in self.clusters:
            if cf.dimension != self.dimension:
                raise SnapshotError("clusters", f"cluster {cf.cluster_id} has dimension {cf.dimension}")
            if cf.cluster_id >= self.next_cluster_id:
                raise SnapshotError("clusters", f"cluster {cf.cluster_id} is beyond the id counter")
        for point, cluster_id in self.points:
            if cluster_id not in sizes:
                raise SnapshotError("points", f"point {point.point_id} references unknown cluster {cluster_id}")
            if point.dimension != self.dimension:
                raise SnapshotError("points", f"point {point.point_id} has dimension {point.dimension}")
            sizes[cluster_id] += 1
        for cf in self.clusters:
            if sizes[cf.cluster_id] != cf.n:
                raise SnapshotError(
                    "points", f"cluster {cf.cluster_id} has n={cf.n} but {sizes[cf.cluster_id]} stored points"
                )

    def restore(self) -> tuple[Model, PointStore]:
        self.validate()
        store = PointStore(dimension=self.dimension)
        model = Model(
            params=self.params,
            dimension=self.dimension,
            generation=self.generation,
            next_cluster_id=self.next_cluster_id,
            next_point_id=self.next_point_id,
        )
        for cf in self.clusters:
            store.register_cluster(cf.cluster_id)
            model.clusters[cf.cluster_id] = cf
        try:
            for point, cluster_id in self.points:
                store.append_point(point, cluster_id)
        except CficaError as e:
            raise SnapshotError("points", str(e)) from e
        return model, store

    def render(self) -> str:
        header = {
            "dimension": self.dimension,
            "generation": self.generation,
            "next_cluster_id": self.next_cluster_id,
            "next_point_id": self.next_point_id,
            "params": {
                "k": self.params.k,
                "p": self.params.p,
                "lambda": self.params.lambda_,
                "theta": self.params.theta,
                "delta": self.params.delta,
                "drift_mode": str(self.params.drift_mode),
            },
        }
        buffer = io.StringIO()
        buffer.write(f"{MAGIC} {STATE_FORMAT_VERSION}\n")
        buffer.write(json.dumps(header) + "\n")
        buffer.write(f"clusters {len(self.clusters)}\n")
        for cf in self.clusters:
            buffer.write(json.dumps(_cluster_record(cf)) + "\n")
        buffer.write(f"points {len(self.points)}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        for point, cluster_id in self.points:
            writer.writerow(
                [point.point_id, cluster_id, point.label or "", *(repr(x) for x in _floats(point.features))]
            )
        body = buffer.getvalue()
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        return f"{body}checksum sha256 {digest}\n"

    @classmethod
    def parse(cls, text: str) -> StoreSnapshot:
        """
        Parse a state file.

        :raises SnapshotError: Naming the section that is missing, truncated or corrupt.
        :raises SnapshotVersionError: If the file has a different format version.
        """
        lines = text.split("\n")
        cursor = 0

        def take(section: str) -> str:
            nonlocal cursor
            if cursor >= len(lines) or (cursor == len(lines) - 1 and lines[cursor] == ""):
                raise SnapshotError(section, "file ends early")
            line = lines[cursor]
            cursor += 1
            return line

        def count_line(section: str) -> int:
            word, _, raw = take(section).partition(" ")
            if word != section:
                raise SnapshotError(section, f"expected a '{section} <count>' line")
            try:
                return int(raw)
            except ValueError:
                raise SnapshotError(section, f"bad record count {raw!r}") from None

        magic, _, found = take("magic").partition(" ")
        if magic != MAGIC:
            raise SnapshotError("magic", "not a state file")
        try:
            found_version = version.parse(found)
        except version.InvalidVersion:
            raise SnapshotError("magic", f"bad format version {found!r}") from None
        if found_version != version.parse(STATE_FORMAT_VERSION):
            raise SnapshotVersionError(found, STATE_FORMAT_VERSION)

        try:
            header = json.loads(take("header"))
            raw_params = header["params"]
            params = HyperParams(
                k=raw_params["k"],
                p=raw_params["p"],
                lambda_=raw_params["lambda"],
                theta=raw_params["theta"],
                delta=raw_params["delta"],
                drift_mode=DriftMode(raw_params["drift_mode"]),
            )
            dimension = int(header["dimension"])
            generation = int(header["generation"])
            next_cluster_id = int(header["next_cluster_id"])
            next_point_id = int(header["next_point_id"])
        except SnapshotError:
            raise
        except (ValueError, KeyError, TypeError) as e:
            raise SnapshotError("header", str(e)) from e

        clusters: list[ClusterFeature] = []
        for _ in range(count_line("clusters")):
            line = take("clusters")
            try:
                clusters.append(_cluster_from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as e:
                raise SnapshotError("clusters", f"bad record {line[:60]!r}: {e}") from e

        points: list[tuple[Point, int]] = []
        point_count = count_line("points")

        def physical_lines() -> Iterator[str]:
            nonlocal cursor
            while cursor < len(lines):
                cursor += 1
                yield lines[cursor - 1] + "\n"

        # one reader for the whole section: a quoted label may span several lines
        reader = csv.reader(physical_lines())
        for _ in range(point_count):
            try:
                row = next(reader)
            except StopIteration:
                raise SnapshotError("points", "file ends early") from None
            except csv.Error as e:
                raise SnapshotError("points", str(e)) from e
            try:
                point_id, cluster_id, label, *features = row
                if len(features) != dimension:
                    raise ValueError(f"expected {dimension} features, found {len(features)}")
                point = Point(int(point_id), as_vector([float(x) for x in features]), label or None)
                points.append((point, int(cluster_id)))
            except ValueError as e:
                raise SnapshotError("points", f"bad record {','.join(row)[:60]!r}: {e}") from e

        body_end = sum(len(line) + 1 for line in lines[:cursor])
        word, _, digest = take("checksum").partition(" sha256 ")
        if word != "checksum":
            raise SnapshotError("checksum", "missing checksum line")
        if hashlib.sha256(text[:body_end].encode("utf-8")).hexdigest() != digest.strip():
            raise SnapshotError("checksum", "digest does not match the file contents")
        if any(line.strip() for line in lines[cursor:]):
            raise SnapshotError("checksum", "unexpected data after the checksum")

        return cls(dimension, params, generation, next_cluster_id, next_point_id, clusters, points)


def save_snapshot(model: Model, store: PointStore, path: str | os.PathLike[str]) -> Path:
    """
    Write the state file atomically (temp file, then rename).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = StoreSnapshot.capture(model, store).render()

    # Write atomically by writing to temp file then renaming
    temp_file = path.with_name(path.name + ".tmp")
    try:
        with open(temp_file, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        temp_file.replace(path)
    except OSError:
        temp_file.unlink(missing_ok=True)
        raise
    logger.info("Saved generation %d with %d points to %s.", model.generation, len(store), path)
    return path


def load_snapshot(path: str | os.PathLike[str]) -> tuple[Model, PointStore]:
    """
    Read a state file written by save_snapshot.
    """
    path = Path(path)
    logger.debug("Loading state from %s.", path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        text = f.read()
    model, store = StoreSnapshot.parse(text).restore()
    logger.info("Loaded generation %d with %d clusters from %s.", model.generation, model.active_count, path)
    return model, store
