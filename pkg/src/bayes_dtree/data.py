"""CSV ingestion and cross-validation splitting."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .tree import Dataset

MISSING_TOKENS = ["", "?"]


class DatasetError(ValueError):
    pass


class DataFormatError(DatasetError):
    """The file could not be parsed as a rectangular CSV table."""


class EmptyDatasetError(DatasetError):
    """No rows survive missing-value handling."""


class SingleClassError(DatasetError):
    """The label column holds fewer than two classes."""


@dataclass
class LoadedTable:
    dataset: Dataset
    feature_names: list[str]
    class_names: list
    categorical: list[str]


def _resolve_label(columns, label_column):
    if label_column in columns:
        return label_column
    if isinstance(label_column, str) and label_column.lstrip("-").isdigit():
        label_column = int(label_column)
    if isinstance(label_column, int):
        try:
            return columns[label_column]
        except IndexError:
            pass
    raise DatasetError(f"label column {label_column!r} not found")


def load_table(
    path,
    label_column,
    missing_policy: str = "impute",
    *,
    header: bool = True,
    binarize_above: float | None = None,
) -> LoadedTable:
    """Read a CSV into a :class:`Dataset`.

    ``label_column`` is a column name, or a (possibly negative) position when
    the file has no header. Numeric columns are parsed as floats; anything else
    is integer-coded in order of first appearance. ``missing_policy`` is
    ``"drop"`` (discard rows with a missing cell) or ``"impute"`` (column
    median over the non-missing values). With ``binarize_above`` set, labels
    are mapped to ``label > binarize_above``.
    """
    if missing_policy not in ("drop", "impute"):
        raise ValueError("missing_policy must be 'drop' or 'impute'")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        raw = pd.read_csv(
            path,
            header=0 if header else None,
            dtype=str,
            keep_default_na=False,
            na_values=MISSING_TOKENS,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"cannot parse {path}: {exc}") from exc
    if raw.shape[1] < 2:
        raise DataFormatError(f"{path}: need a label column and at least one feature column")
    if not header:
        raw.columns = [str(c) for c in raw.columns]
    label = _resolve_label(list(raw.columns), label_column)

    if missing_policy == "drop":
        raw = raw.dropna(axis=0, how="any").reset_index(drop=True)
    else:
        raw = raw[raw[label].notna()].reset_index(drop=True)
    if raw.empty:
        raise EmptyDatasetError(f"{path}: no rows left after missing-value handling")

    y_raw = raw[label]
    numeric_y = pd.to_numeric(y_raw, errors="coerce")
    if numeric_y.notna().all():
        y_raw = numeric_y
        if binarize_above is not None:
            y_raw = (y_raw > binarize_above).astype(int)
    elif binarize_above is not None:
        raise DatasetError("binarize_above needs a numeric label column")
    class_names, y = np.unique(y_raw.to_numpy(), return_inverse=True)
    if len(class_names) < 2:
        raise SingleClassError(f"{path}: label column {label!r} has a single class")

    columns, categorical = [], []
    for name in raw.columns:
        if name == label:
            continue
        col = raw[name]
        num = pd.to_numeric(col, errors="coerce")
        if num[col.notna()].notna().all():
            values = num.to_numpy(dtype=float)
        else:
            codes, _ = pd.factorize(col, use_na_sentinel=True)
            values = np.where(codes < 0, np.nan, codes).astype(float)
            categorical.append(name)
        missing = np.isnan(values)
        if missing.any():
            fill = np.median(values[~missing]) if (~missing).any() else 0.0
            values = np.where(missing, fill, values)
        columns.append(values)
    X = np.column_stack(columns)
    feature_names = [c for c in raw.columns if c != label]
    return LoadedTable(
        Dataset(X, y.astype(np.intp), len(class_names)),
        [str(c) for c in feature_names],
        list(class_names),
        [str(c) for c in categorical],
    )


def load_csv(path, label_column, missing_policy: str = "impute", **kwargs) -> Dataset:
    return load_table(path, label_column, missing_policy, **kwargs).dataset


@dataclass(frozen=True)
class FoldPlan:
    assignment: np.ndarray
    k: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, test

    def sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.k).tolist()


def kfold(n: int, k: int = 5, seed: int = 0) -> FoldPlan:
    """Seeded shuffle, then round-robin fold assignment."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.intp)
    assignment[order] = np.arange(n) % k
    return FoldPlan(assignment, k)
