"""Dataset containers, centering/standardization and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DataError

#: Sample standard deviations below this are treated as zero-variance columns.
CONSTANT_SD_TOL = 1e-12


@dataclass(frozen=True)
class RawDataset:
    """Response and predictors in their original units.

    Parameters
    ----------
    y : ndarray of shape (n,)
    X : ndarray of shape (n, p)
    column_names : list of str, optional
        Unique names, one per column of ``X``.
    """

    y: np.ndarray
    X: np.ndarray
    column_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2:
            raise DataError("y must be 1-d and X 2-d")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"y has {y.shape[0]} rows but X has {X.shape[0]}")
        if y.shape[0] < 2:
            raise DataError("need at least 2 observations")
        if X.shape[1] < 1:
            raise DataError("need at least 1 predictor")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("non-finite entry in y or X")
        names = self.column_names
        if names is not None:
            names = tuple(str(c) for c in names)
            if len(names) != X.shape[1]:
                raise DataError(
                    f"{len(names)} column names for {X.shape[1]} columns")
            if len(set(names)) != len(names):
                raise DataError("column names must be unique")
        y.flags.writeable = False
        X.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take_columns(self, order: Sequence[int]) -> "RawDataset":
        order = list(order)
        names = None
        if self.column_names is not None:
            names = tuple(self.column_names[j] for j in order)
        return RawDataset(self.y, self.X[:, order], names)

    def take_rows(self, rows) -> "RawDataset":
        return RawDataset(self.y[rows], self.X[rows], self.column_names)


@dataclass(frozen=True)
class Dataset:
    """Centered (and optionally scaled) data ready for selection.

    ``X[:, j] = (X_raw[:, j] - x_means[j]) / x_scales[j]`` and
    ``y = y_raw - y_mean``.  Zero-variance columns keep ``x_scales[j] = 1``
    and are flagged in ``degenerate``.
    """

    y: np.ndarray
    X: np.ndarray
    y_mean: float
    x_means: np.ndarray
    x_scales: np.ndarray
    degenerate: np.ndarray
    column_names: Optional[tuple[str, ...]] = None
    scaled: bool = True

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def name(self, j: int) -> str:
        """User-facing label of column ``j`` (1-based when unnamed)."""
        if self.column_names is not None:
            return self.column_names[j]
        return f"x{j + 1}"

    def transform_X(self, X_raw) -> np.ndarray:
        """Apply the recorded centering/scaling to new rows."""
        return (np.asarray(X_raw, dtype=float) - self.x_means) / self.x_scales

    def to_raw(self) -> RawDataset:
        """Undo centering/scaling."""
        return RawDataset(self.y + self.y_mean,
                          self.X * self.x_scales + self.x_means,
                          self.column_names)


def standardize(raw: RawDataset, scale_columns: bool = True) -> Dataset:
    """Center ``y`` and every column of ``X``; optionally scale to unit sd.

    The sample standard deviation uses divisor ``n - 1``.  With
    ``scale_columns=False`` only centering is applied and every scale is 1.
    """
    if not isinstance(raw, RawDataset):
        raw = RawDataset(*raw)
    y_mean = float(raw.y.mean())
    y = raw.y - y_mean
    x_means = raw.X.mean(axis=0)
    Xc = raw.X - x_means
    sd = Xc.std(axis=0, ddof=1)
    degenerate = sd < CONSTANT_SD_TOL
    if scale_columns:
        scales = np.where(degenerate, 1.0, sd)
    else:
        scales = np.ones(raw.p)
    X = Xc / scales
    if np.any(degenerate):
        # exact zeros rather than round-off residue
        X[:, degenerate] = 0.0
    for a in (y, X, x_means, scales, degenerate):
        a.flags.writeable = False
    return Dataset(y=y, X=X, y_mean=y_mean, x_means=x_means, x_scales=scales,
                   degenerate=degenerate, column_names=raw.column_names,
                   scaled=scale_columns)


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(
            f"non-numeric cell {text!r} at row {row}, column {col}") from None
    if not math.isfinite(v):
        raise DataError(f"non-finite cell {text!r} at row {row}, column {col}")
    return v


def resolve_column(header: Sequence[str], selector: Union[str, int]) -> int:
    """Index of the column named by ``selector``.

    A header name wins; otherwise an integer (or digit string) is read as a
    1-based column position.
    """
    header = list(header)
    if isinstance(selector, str) and selector in header:
        return header.index(selector)
    try:
        pos = int(selector)
    except (TypeError, ValueError):
        pos = None
    if pos is not None and 1 <= pos <= len(header):
        return pos - 1
    raise ConfigError(
        f"response column {selector!r} not found; available columns: "
        + ", ".join(header))


def ingest_csv(path, response: Union[str, int]) -> RawDataset:
    """Read a numeric CSV with a header row.

    Rows are reported 1-based with the header as row 1, so the first data
    row is row 2.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        iy = resolve_column(header, response)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(
                    f"row {lineno} has {len(rec)} fields, expected {len(header)}")
            rows.append([_parse_cell(c.strip(), lineno, header[k])
                         for k, c in enumerate(rec)])
    if not rows:
        raise DataError(f"{path} has no data rows")
    M = np.array(rows, dtype=float)
    xcols = [k for k in range(len(header)) if k != iy]
    return RawDataset(M[:, iy], M[:, xcols], tuple(header[k] for k in xcols))


def write_csv(path, raw: RawDataset, response_name: str = "y") -> None:
    names = raw.column_names or tuple(f"x{j + 1}" for j in range(raw.p))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([response_name, *names])
        for yi, row in zip(raw.y, raw.X):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in row)])
