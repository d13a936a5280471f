"""Data model, CSV ingestion and column summaries shared by all test families.

Conventions used everywhere in this package:

* observations are rows, variables are columns;
* all covariance quantities use the divisor ``n`` (NOT ``n - 1``) --
  this matches the normalization of the maximum-type statistics and of the
  moment variance estimator, and differs from ``numpy.cov``'s default;
* missing values are rejected, never imputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CsvParseError,
    DimensionMismatchError,
    MatrixIoError,
    ShapeError,
)


def validate_matrix(values, min_rows: int = 2, min_cols: int = 2) -> np.ndarray:
    """Validate and coerce an array-like to a float64 data matrix.

    Raises ShapeError unless the input is a 2-d, all-finite matrix with at
    least ``min_rows`` rows and ``min_cols`` columns.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got {arr.ndim}-d input")
    n, p = arr.shape
    if n < min_rows or p < min_cols:
        raise ShapeError(
            f"matrix must be at least {min_rows}x{min_cols}, got {n}x{p}"
        )
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ShapeError(
            f"non-finite entry at row {bad[0] + 1}, column {bad[1] + 1}"
        )
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """n observations (rows) by p variables (columns) of finite reals.

    Immutable after construction; safe to share across parallel workers.
    Column names are metadata only, all computation is positional.
    """

    values: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = validate_matrix(self.values)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != arr.shape[1]:
                raise DimensionMismatchError(
                    f"{len(names)} column names for {arr.shape[1]} columns"
                )
            object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def as_data_matrix(data) -> DataMatrix:
    """Accept a DataMatrix or any array-like and return a DataMatrix."""
    if isinstance(data, DataMatrix):
        return data
    return DataMatrix(np.asarray(data, dtype=np.float64))


@dataclass(frozen=True)
class GroupedSample:
    """Two independent samples observed on the same p variables."""

    x: DataMatrix
    y: DataMatrix

    def __post_init__(self):
        x = as_data_matrix(self.x)
        y = as_data_matrix(self.y)
        if x.p != y.p:
            raise DimensionMismatchError(
                f"samples disagree on dimension: {x.p} vs {y.p} columns"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class ColumnStats:
    """Column means and the divisor-n covariance matrix."""

    means: np.ndarray
    cov: np.ndarray = field(repr=False)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.cov)

    def pairwise_cov(self, j1: int, j2: int) -> float:
        return float(self.cov[j1, j2])


def column_stats(m) -> ColumnStats:
    """Means and divisor-n covariances of all columns."""
    m = as_data_matrix(m)
    x = m.values
    means = x.mean(axis=0)
    xc = x - means
    cov = xc.T @ xc / m.n
    return ColumnStats(means=means, cov=cov)


def center(m) -> DataMatrix:
    """Subtract each column's mean; column names are preserved."""
    m = as_data_matrix(m)
    return DataMatrix(m.values - m.values.mean(axis=0), m.column_names)


def load_csv(path, has_header: bool = False) -> DataMatrix:
    """Read a comma-separated numeric matrix.

    Accepts UNIX or Windows line endings and an optional single header row.
    Every data cell must parse as a decimal-point real; rows must be
    rectangular.  Raises MatrixIoError / CsvParseError / ShapeError.
    """
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise MatrixIoError(f"cannot read {path}: {exc}") from exc

    names = None
    rows: list[list[float]] = []
    width = None
    with fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue  # ignore blank lines, including a trailing one
            if lineno == 1 and has_header:
                names = tuple(cell.strip() for cell in row)
                width = len(names)
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CsvParseError(
                    f"ragged row: expected {width} cells, got {len(row)}",
                    row=lineno,
                )
            parsed = []
            for colno, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"cell {cell!r} is not a number",
                        row=lineno,
                        column=colno,
                    ) from None
            rows.append(parsed)

    if not rows:
        raise ShapeError(f"{path} contains no data rows")
    return DataMatrix(np.asarray(rows, dtype=np.float64), names)


def save_csv(m, path) -> None:
    """Write a DataMatrix back to CSV with round-trip-safe precision."""
    m = as_data_matrix(m)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if m.column_names is not None:
            writer.writerow(m.column_names)
        for row in m.values:
            writer.writerow([f"{x:.17g}" for x in row])
