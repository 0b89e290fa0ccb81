"""
vecmath.py

Dense-vector primitives shared by the clustering modules.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatch, EmptyInput, InvalidVector

__all__ = ["Vector", "as_vector", "check_dimension", "euclidean", "squared_components", "mean_of", "norm"]

Vector: TypeAlias = npt.NDArray[np.float64]


def freeze(arr: npt.ArrayLike) -> Vector:
    """
    Return a read-only float64 copy of arr.
    """
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def as_vector(values: Any) -> Vector:
    """
    Convert values into a validated feature vector.

    This is where ingested data is checked, the other helpers assume valid input.

    :param values: Any 1-D sequence of reals.
    :return: A read-only float64 vector.
    :raises InvalidVector: If values is empty, not 1-D, or holds NaN/Inf.
    """
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidVector(f"Not a numeric vector: {values!r}.") from e
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidVector(f"A vector must be one-dimensional and non-empty, got shape {arr.shape}.")
    if not np.all(np.isfinite(arr)):
        raise InvalidVector("A vector cannot contain NaN or Inf.")
    return freeze(arr)


def check_dimension(a: Vector, b: Vector) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[0], b.shape[0])


def euclidean(a: Vector, b: Vector) -> float:
    """
    Euclidean distance between a and b.
    """
    check_dimension(a, b)
    return float(np.sqrt(np.sum(np.square(a - b))))


def norm(a: Vector) -> float:
    return float(np.sqrt(np.sum(np.square(a))))


def squared_components(a: Vector) -> Vector:
    return freeze(np.square(a))


def mean_of(points: Sequence[Vector]) -> Vector:
    """
    Component-wise arithmetic mean of points.

    :raises EmptyInput: If points is empty.
    :raises DimensionMismatch: If the points disagree on dimension.
    """
    if not points:
        raise EmptyInput("Cannot take the mean of no points.")
    first = points[0]
    for point in points[1:]:
        check_dimension(first, point)
    return freeze(np.mean(np.vstack(points), axis=0))
