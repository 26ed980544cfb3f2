"""Sample container and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["Dataset", "DataError", "MissingColumnError", "load_csv"]


class DataError(ValueError):
    pass


class MissingColumnError(DataError, KeyError):
    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class Dataset:
    """Responses ``y`` (T,) and regressors ``X`` (T, d)."""

    y: np.ndarray
    X: np.ndarray
    x_names: tuple[str, ...] = ()
    y_name: str = "y"
    normalization: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != y.shape[0]:
            raise DataError(f"y has {y.shape[0]} rows but X has {X.shape[0]}")
        if y.shape[0] < 1:
            raise DataError("dataset is empty")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("dataset contains non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        if not self.x_names:
            object.__setattr__(self, "x_names", tuple(f"x{k + 1}" for k in range(X.shape[1])))

    @property
    def T(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def with_y(self, y) -> "Dataset":
        return Dataset(y, self.X, self.x_names, self.y_name, self.normalization)


def load_csv(path, y_column: str, x_columns=None, normalize: bool = False) -> Dataset:
    """Read a headed CSV. ``x_columns=None`` takes every column except ``y_column``.

    Rows with empty cells are dropped (the count is recorded in
    ``normalization["dropped_rows"]``); a non-numeric cell raises
    :class:`DataError` naming its line. With ``normalize`` every selected
    column is shifted and scaled to mean 0 and sample sd 1, and the shifts and
    scales are recorded for inverse transforms.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if x_columns is None:
            x_columns = [h for h in header if h != y_column]
        x_columns = list(x_columns)
        for col in [y_column, *x_columns]:
            if col not in header:
                raise MissingColumnError(f"column {col!r} not found in {path}")
        pos = [header.index(c) for c in [y_column, *x_columns]]
        rows, dropped = [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            cells = [row[p].strip() if p < len(row) else "" for p in pos]
            if any(c == "" for c in cells):
                dropped += 1
                continue
            try:
                # float() accepts only '.' as decimal separator, independent of locale
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value in {cells}") from None
    if not rows:
        raise DataError(f"{path} has no complete rows")
    arr = np.array(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: non-finite value")
    record = {"dropped_rows": dropped}
    if normalize:
        mean = arr.mean(axis=0)
        sd = arr.std(axis=0, ddof=1) if arr.shape[0] > 1 else np.ones(arr.shape[1])
        sd = np.where(sd > 0, sd, 1.0)
        arr = (arr - mean) / sd
        names = [y_column, *x_columns]
        record.update(mean=dict(zip(names, mean.tolist())), sd=dict(zip(names, sd.tolist())))
    return Dataset(arr[:, 0], arr[:, 1:], tuple(x_columns), y_column, record)
