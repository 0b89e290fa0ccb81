"""
dataset.py

Read CSV chunks into Points.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DatasetError
from .store import Point

__all__ = ["MISSING_TOKENS", "DatasetSpec", "ChunkLoad", "load_chunk", "load_chunks", "format_point"]

logger = logging.getLogger(__name__)

# Cells treated as a missing value; rows holding one are dropped
MISSING_TOKENS = ("", "?")


@dataclass(frozen=True, slots=True)
class DatasetSpec:
    """
    How to read a chunk file.

    Column selectors are 1-based indices ("5") or header names ("class").
    label_col "none" means the data is unlabeled; an empty feature_cols selects
    every column that is neither the label nor the id column.
    """

    label_col: str = "none"
    feature_cols: tuple[str, ...] = field(default=())
    id_col: str | None = None
    delimiter: str = ","
    header: bool = False

    @property
    def separator(self) -> str:
        return r"\s+" if self.delimiter == "whitespace" else self.delimiter


@dataclass(frozen=True, slots=True)
class ChunkLoad:
    path: str
    points: list[Point]
    dropped_rows: int


def _resolve(selector: str, columns: Sequence[object], path: str, *, header: bool) -> object:
    """
    Map a selector to a DataFrame column label.
    """
    if selector.isdigit():
        index = int(selector)
        if not 1 <= index <= len(columns):
            raise DatasetError(path, None, f"column {index} is out of range (the file has {len(columns)} columns)")
        return columns[index - 1]
    if not header:
        raise DatasetError(path, None, f"column name {selector!r} needs a header row")
    if selector not in columns:
        raise DatasetError(path, None, f"no column named {selector!r}")
    return selector


def load_chunk(path: str | os.PathLike[str], spec: DatasetSpec, first_point_id: int = 0) -> ChunkLoad:
    """
    Read one chunk.

    Blank lines are skipped, rows with a missing feature are dropped and counted.

    :param path: The CSV file.
    :param spec: Column selection and format.
    :param first_point_id: Id given to the first kept row when spec has no id column.
    :raises DatasetError: On unreadable files, non-numeric or non-finite features and bad ids,
                          naming the 1-based line where possible.
    """
    name = str(path)
    try:
        frame = pd.read_csv(
            path,
            sep=spec.separator,
            header=0 if spec.header else None,
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            skip_blank_lines=False,
            skipinitialspace=True,
        )
    except FileNotFoundError:
        raise DatasetError(name, None, "file not found") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(name, None, str(e).strip()) from e

    frame = frame.fillna("").astype(str).apply(lambda column: column.str.strip())
    columns = list(frame.columns)
    offset = 2 if spec.header else 1  # row index -> file line
    label_column = None
    if spec.label_col.lower() != "none":
        label_column = _resolve(spec.label_col, columns, name, header=spec.header)
    id_column = None if spec.id_col is None else _resolve(spec.id_col, columns, name, header=spec.header)
    if spec.feature_cols:
        feature_columns = [_resolve(sel, columns, name, header=spec.header) for sel in spec.feature_cols]
    else:
        feature_columns = [column for column in columns if column not in (label_column, id_column)]
    if not feature_columns:
        raise DatasetError(name, None, "no feature columns selected")
    if label_column in feature_columns or (id_column is not None and id_column in feature_columns):
        raise DatasetError(name, None, "the label and id columns cannot also be features")

    blank = (frame == "").all(axis=1)
    frame = frame[~blank]
    raw = frame[feature_columns]
    missing = raw.isin(MISSING_TOKENS)
    values = raw.apply(pd.to_numeric, errors="coerce")
    bad = (values.isna() | ~np.isfinite(values.fillna(0.0))) & ~missing
    if bad.to_numpy().any():
        row_pos, col_pos = np.argwhere(bad.to_numpy())[0]
        line = int(frame.index[row_pos]) + offset
        token = raw.iat[row_pos, col_pos]
        raise DatasetError(name, line, f"column {feature_columns[col_pos]!r} holds {token!r}, not a finite number")

    dropped = missing.any(axis=1)
    if dropped.any():
        logger.info("Dropping %d rows with missing values from %s.", int(dropped.sum()), name)
    kept = frame[~dropped]
    # parse the kept text again with float() so values are correctly rounded
    matrix = raw[~dropped].astype(np.float64).to_numpy()

    if id_column is not None:
        try:
            ids = [int(raw_id) for raw_id in kept[id_column]]
        except ValueError as e:
            raise DatasetError(name, None, f"point ids must be integers: {e}") from e
    else:
        ids = list(range(first_point_id, first_point_id + len(kept)))
    labels = [None] * len(kept) if label_column is None else [label or None for label in kept[label_column]]

    points: list[Point] = []
    for point_id, row, label, index in zip(ids, matrix, labels, kept.index):
        try:
            points.append(Point(point_id, row, label))
        except ValueError as e:
            raise DatasetError(name, int(index) + offset, str(e)) from e

    logger.debug("Read %d points (%d dropped) from %s.", len(points), int(dropped.sum()), name)
    return ChunkLoad(name, points, int(dropped.sum()))


def load_chunks(
    paths: Sequence[str | os.PathLike[str]], spec: DatasetSpec, first_point_id: int = 0
) -> list[ChunkLoad]:
    """
    Read chunks in arrival order, continuing point ids from one chunk to the next.
    """
    loads: list[ChunkLoad] = []
    next_id = first_point_id
    for path in paths:
        load = load_chunk(Path(path), spec, next_id)
        loads.append(load)
        if load.points:
            next_id = max(next_id, max(point.point_id for point in load.points) + 1)
    return loads


def format_point(point: Point, delimiter: str = ",") -> str:
    """
    The point's features as a CSV line.
    """
    return delimiter.join(repr(float(x)) for x in point.features.tolist())
