"""
support.py

Synthetic labeled datasets shared by the test modules.
"""

from __future__ import annotations

import csv
import os
from collections.abc import Sequence

import numpy as np

from src.store import Point


def gaussian_blobs(
    centres: Sequence[Sequence[float]], per_blob: int, scale: float, seed: int, first_id: int = 0
) -> list[Point]:
    """
    per_blob points around each centre, labeled c0, c1, ..., shuffled with a fixed seed.
    """
    rng = np.random.default_rng(seed)
    rows: list[tuple[np.ndarray, str]] = []
    for index, centre in enumerate(centres):
        samples = rng.normal(loc=centre, scale=scale, size=(per_blob, len(centre)))
        rows.extend((sample, f"c{index}") for sample in samples)
    order = rng.permutation(len(rows))
    return [Point(first_id + i, rows[j][0], rows[j][1]) for i, j in enumerate(order)]


def chunked(points: Sequence[Point], sizes: Sequence[int]) -> list[list[Point]]:
    assert sum(sizes) == len(points)
    chunks: list[list[Point]] = []
    start = 0
    for size in sizes:
        chunks.append(list(points[start : start + size]))
        start += size
    return chunks


def write_chunk(path: str | os.PathLike[str], points: Sequence[Point]) -> None:
    """
    Write points as feature columns followed by the label column, without a header.
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        for point in points:
            writer.writerow([*(repr(float(x)) for x in point.features.tolist()), point.label or ""])


# Three blobs in 4 dimensions, sized like the iris protocol (75/25/25/25)
IRIS_LIKE_CENTRES = ((0.0, 0.0, 0.0, 0.0), (20.0, 0.0, 0.0, 0.0), (0.0, 20.0, 0.0, 0.0))
IRIS_LIKE_SIZES = (75, 25, 25, 25)


def iris_like(seed: int = 7) -> list[Point]:
    return gaussian_blobs(IRIS_LIKE_CENTRES, 50, 0.6, seed)
