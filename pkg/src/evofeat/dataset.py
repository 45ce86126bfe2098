"""Tabular datasets: CSV loading, train/test splitting, folds, column bookkeeping."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

MISSING = {"", "NA"}


class Task(str, Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus target.

    ``n_original`` counts the leading columns that came from the source data;
    any columns after those were appended by feature construction.
    Classification targets are dense ids ``0..n_classes-1``; ``class_labels``
    maps them back to the labels seen at load time.
    """

    features: np.ndarray
    target: np.ndarray
    task: Task
    column_names: tuple[str, ...] = ()
    n_classes: int = 0
    class_labels: tuple[str, ...] = ()
    n_original: int = -1

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        X = np.array(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        y = np.array(self.target, dtype=np.int64 if self.task == Task.CLASSIFICATION else np.float64)
        if y.shape != (X.shape[0],):
            raise DataError("target length does not match row count")
        if X.shape[1] < 1:
            raise DataError("dataset needs at least one feature column")
        if not self.column_names:
            object.__setattr__(self, "column_names", tuple(f"x{j + 1}" for j in range(X.shape[1])))
        if len(self.column_names) != X.shape[1]:
            raise DataError("column_names does not match column count")
        if self.task == Task.CLASSIFICATION:
            n_classes = self.n_classes or (int(y.max()) + 1 if len(y) else 0)
            if len(y) and (y.min() < 0 or y.max() >= n_classes):
                raise DataError("class ids must lie in 0..n_classes-1")
            object.__setattr__(self, "n_classes", n_classes)
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if self.n_original < 0:
            object.__setattr__(self, "n_original", X.shape[1])

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def original_features(self) -> np.ndarray:
        return self.features[:, : self.n_original]

    @property
    def constructed_features(self) -> np.ndarray:
        return self.features[:, self.n_original :]

    @property
    def is_classification(self) -> bool:
        return self.task == Task.CLASSIFICATION

    def take(self, rows) -> Dataset:
        """Row subset, keeping column metadata."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            self.features[rows], self.target[rows], self.task, self.column_names,
            self.n_classes, self.class_labels, self.n_original,
        )

    def with_features(self, X, names) -> Dataset:
        """Same rows and target over a different feature matrix."""
        return Dataset(X, self.target, self.task, tuple(names), self.n_classes,
                       self.class_labels, len(names))


@dataclass(frozen=True)
class Split:
    train: Dataset
    test: Dataset
    seed: int
    train_rows: np.ndarray = field(repr=False)
    test_rows: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class FoldAssignment:
    fold_of_row: np.ndarray
    C: int

    def fold_rows(self, c: int) -> tuple[np.ndarray, np.ndarray]:
        """(training rows, validation rows) for fold ``c``."""
        mask = self.fold_of_row == c
        return np.nonzero(~mask)[0], np.nonzero(mask)[0]


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"unparseable cell at row {row}, column {col!r}: {text!r}") from None


def load_csv(path, target_column, task) -> Dataset:
    """Read a headered CSV; rows with any missing cell are dropped.

    ``target_column`` is a header name or a (possibly negative) column index.
    """
    task = Task(task)
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        raw = [[c.strip() for c in r] for r in reader if r]

    if isinstance(target_column, str) and target_column in header:
        t_idx = header.index(target_column)
    else:
        try:
            t_idx = int(target_column)
        except (TypeError, ValueError):
            raise DataError(f"no target column {target_column!r}") from None
        if not -len(header) <= t_idx < len(header):
            raise DataError(f"target column index {t_idx} out of range")
        t_idx %= len(header)

    feature_cols = [j for j in range(len(header)) if j != t_idx]
    X_rows, y_raw = [], []
    for i, r in enumerate(raw, start=2):  # line numbers, header is line 1
        if len(r) != len(header):
            raise DataError(f"row {i} has {len(r)} cells, expected {len(header)}")
        if any(c in MISSING for c in r):
            continue
        X_rows.append([_parse_cell(r[j], i, header[j]) for j in feature_cols])
        y_raw.append(r[t_idx] if task == Task.CLASSIFICATION else _parse_cell(r[t_idx], i, header[t_idx]))
    if not X_rows:
        raise DataError("empty dataset")
    if len(X_rows) < 2:
        raise DataError("dataset needs at least 2 complete rows")

    names = tuple(header[j] for j in feature_cols)
    if task == Task.CLASSIFICATION:
        labels = sorted(set(y_raw), key=_label_key)
        lookup = {lab: k for k, lab in enumerate(labels)}
        y = np.array([lookup[v] for v in y_raw], dtype=np.int64)
        return Dataset(np.array(X_rows), y, task, names, len(labels), tuple(labels))
    return Dataset(np.array(X_rows), np.array(y_raw), task, names)


def _label_key(label: str):
    # numeric labels sort numerically, the rest lexically after them
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def split_train_test(ds: Dataset, fraction: float = 0.2, seed: int = 0) -> Split:
    """Uniform random row partition with ``round(fraction * n)`` test rows."""
    if not 0.0 < fraction < 1.0:
        raise DataError("test fraction must lie in (0, 1)")
    n_test = int(round(fraction * ds.n))
    if n_test < 1 or n_test >= ds.n:
        raise DataError(f"test fraction {fraction} leaves an empty part for n={ds.n}")
    perm = np.random.default_rng(seed).permutation(ds.n)
    test_rows = np.sort(perm[:n_test])
    train_rows = np.sort(perm[n_test:])
    return Split(ds.take(train_rows), ds.take(test_rows), seed, train_rows, test_rows)


def make_folds(train: Dataset, C: int = 5, seed: int = 0) -> FoldAssignment:
    """C-fold assignment; stratified by class for classification.

    Rows of each class are shuffled and dealt round-robin, continuing the deal
    where the previous class stopped, so both fold sizes and per-class counts
    differ by at most one.
    """
    if C < 2:
        raise DataError("need at least 2 folds")
    if C > train.n:
        raise DataError(f"{C} folds requested for {train.n} rows")
    rng = np.random.default_rng(seed)
    fold = np.empty(train.n, dtype=np.int64)
    if train.is_classification:
        offset = 0
        for c in range(train.n_classes):
            rows = np.nonzero(train.target == c)[0]
            rows = rows[rng.permutation(len(rows))]
            fold[rows] = (offset + np.arange(len(rows))) % C
            offset = (offset + len(rows)) % C
    else:
        fold[rng.permutation(train.n)] = np.arange(train.n) % C
    return FoldAssignment(fold, C)


def append_feature(ds: Dataset, values, name: str) -> Dataset:
    """New dataset with one extra trailing column; ``ds`` is untouched."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (ds.n,):
        raise DataError(f"feature has {values.shape[0] if values.ndim else 0} values, dataset has {ds.n} rows")
    X = np.column_stack([ds.features, values])
    return Dataset(X, ds.target, ds.task, ds.column_names + (name,), ds.n_classes,
                   ds.class_labels, ds.n_original)


def erc_range(train: Dataset) -> tuple[float, float]:
    """Global min and max over the original feature cells of ``train``."""
    X = train.original_features
    lo, hi = float(X.min()), float(X.max())
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DataError("non-finite feature values")
    return lo, hi


def fingerprint(ds: Dataset) -> str:
    """Content hash of features and target."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ds.features).tobytes())
    h.update(np.ascontiguousarray(ds.target).tobytes())
    return h.hexdigest()
