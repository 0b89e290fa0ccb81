"""
errors.py

Exceptions raised by the clustering library.
"""

from __future__ import annotations

from collections.abc import Iterable

__all__ = [
    "CficaError",
    "DimensionMismatch",
    "InvalidVector",
    "EmptyInput",
    "InvalidParameter",
    "DuplicatePointId",
    "UnknownCluster",
    "ConsistencyError",
    "DatasetError",
    "SnapshotError",
    "SnapshotVersionError",
    "UnlabeledPoints",
]


class CficaError(ValueError):
    """
    Base class of clustering errors.
    """

    pass


class DimensionMismatch(CficaError):
    """
    Raised when two vectors (or a vector and a model) disagree on dimension.
    """

    def __init__(self, expected: int, actual: int) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch: expected {expected}, got {actual}.")


class InvalidVector(CficaError):
    """
    Raised when a feature vector is empty, not one-dimensional, or holds NaN/Inf.
    """

    pass


class EmptyInput(CficaError):
    """
    Raised when an operation needs at least one point and got none.
    """

    pass


class InvalidParameter(CficaError):
    """
    Raised when a hyperparameter is out of range.
    """

    def __init__(self, name: str, value: object, reason: str) -> None:
        self.name = name
        self.value = value
        super().__init__(f"Invalid {name}={value!r}: {reason}.")


class DuplicatePointId(CficaError):
    """
    Raised when a point id has already been used.
    """

    def __init__(self, point_id: int) -> None:
        self.point_id = point_id
        super().__init__(f"Point ID {point_id} already exists.")


class UnknownCluster(CficaError):
    """
    Raised when a cluster id does not exist.
    """

    def __init__(self, cluster_id: int) -> None:
        self.cluster_id = cluster_id
        super().__init__(f"Cluster ID {cluster_id} does not exist.")


class ConsistencyError(CficaError):
    """
    Raised when internal state is corrupt, e.g. the point store and a cluster feature disagree.
    """

    pass


class DatasetError(CficaError):
    """
    Raised when a CSV chunk cannot be parsed.
    """

    def __init__(self, path: str, line: int | None, reason: str) -> None:
        """
        :param path: The offending file.
        :param line: The 1-based line number, if the error is tied to a line.
        :param reason: What went wrong.
        """
        self.path = path
        self.line = line
        self.reason = reason
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {reason}")


class SnapshotError(CficaError):
    """
    Raised when a state file is corrupt or truncated.
    """

    def __init__(self, section: str, reason: str) -> None:
        self.section = section
        self.reason = reason
        super().__init__(f"State file {section} section is invalid: {reason}")


class SnapshotVersionError(SnapshotError):
    """
    Raised when a state file was written by an incompatible format version.
    """

    def __init__(self, found: str, expected: str) -> None:
        self.found = found
        self.expected = expected
        super().__init__("magic", f"format version {found} is not compatible with {expected}")


class UnlabeledPoints(CficaError):
    """
    Raised when purity is requested for points without a class label.
    """

    def __init__(self, point_ids: Iterable[int]) -> None:
        self.point_ids = sorted(point_ids)
        shown = ", ".join(map(str, self.point_ids[:10]))
        more = f" (and {len(self.point_ids) - 10} more)" if len(self.point_ids) > 10 else ""
        super().__init__(f"Points without a label: {shown}{more}.")
