"""CSV output in a byte-stable format, and CSV dataset ingestion."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..datagen import Dataset

MISSING = {"", "na", "nan", "null", "none"}
MAX_LISTED = 10


class DataError(ValueError):
    """Malformed input data."""


def fmt(value) -> str:
    """Shortest round-trip text for numbers; integers and strings verbatim."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a header plus rows with ``\\n`` line endings; returns the row count."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([fmt(v) for v in row])
            count += 1
    return count


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        return header, [row for row in reader if row]


def _parse(cell: str) -> float:
    v = float(cell)
    if not math.isfinite(v):
        raise ValueError(cell)
    return v


def ingest_csv_dataset(path: str | Path, response_column: str, standardize: bool = False) -> Dataset:
    """Numeric CSV with a header row to a :class:`Dataset`.

    Every column other than ``response_column`` becomes a predictor. With
    ``standardize`` the predictors are centred and scaled to unit sample
    variance.
    """
    header, body = read_csv(path)
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        dups = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"duplicate header names: {dups}")
    if response_column not in header:
        raise DataError(f"response column {response_column!r} not found in header")
    if not body:
        raise DataError("no data rows")

    missing = []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"row {i} has {len(row)} fields, expected {len(header)}")
        for name, cell in zip(header, row):
            if cell.strip().lower() in MISSING:
                missing.append(f"row {i} column {name!r}")
    if missing:
        shown = ", ".join(missing[:MAX_LISTED])
        more = f" and {len(missing) - MAX_LISTED} more" if len(missing) > MAX_LISTED else ""
        raise DataError(f"missing values at {shown}{more}")

    values = np.empty((len(body), len(header)))
    for j, name in enumerate(header):
        for i, row in enumerate(body):
            try:
                values[i, j] = _parse(row[j].strip())
            except ValueError:
                raise DataError(
                    f"column {name!r} is not numeric (row {i + 2} holds {row[j]!r})") from None

    k = header.index(response_column)
    y = values[:, k].copy()
    keep = [j for j in range(len(header)) if j != k]
    if not keep:
        raise DataError("no predictor columns")
    X = values[:, keep]
    if standardize:
        if X.shape[0] < 2:
            raise DataError("standardizing needs at least two rows")
        X = X - X.mean(axis=0)
        sd = X.std(axis=0, ddof=1)
        const = [header[keep[j]] for j in np.flatnonzero(sd == 0)]
        if const:
            raise DataError(f"cannot standardize constant columns: {const}")
        X = X / sd
    return Dataset(X=np.asfortranarray(X), y=y, columns=tuple(header[j] for j in keep))


def is_binary(y) -> bool:
    return bool(np.all(np.isin(np.unique(y), [0.0, 1.0])))
