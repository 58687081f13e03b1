"""CSV and JSON input/output.

Dialect: comma separator, '.' decimal point, optional single header row
(auto-detected: a first row with any cell that does not parse as a float is
a header).  Floats are written with repr so every emitted file reads back to
the exact same values.  All writes go to a temporary file in the target
directory and are renamed into place, so consumers never see partial files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "MalformedTable",
    "Dataset",
    "read_rows",
    "read_dataset",
    "write_rows",
    "write_json",
    "format_cell",
]


class MalformedTable(ValueError):
    """A CSV file violates the dataset contract; messages carry 1-based
    file coordinates."""


@dataclass(frozen=True)
class Dataset:
    """A rectangular all-numeric table: n rows of d finite reals."""

    values: NDArray[np.float64]
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise MalformedTable("dataset must be a nonempty 2-d table")
        if not np.all(np.isfinite(values)):
            raise MalformedTable("dataset cells must all be finite")
        if self.columns is not None and len(self.columns) != values.shape[1]:
            raise MalformedTable("header width disagrees with the data width")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _parse_float(cell: str) -> float | None:
    text = cell.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value


def read_rows(path: str | Path) -> tuple[list[str] | None, list[list[str]]]:
    """Dialect-level read: optional header plus raw string rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise MalformedTable(f"{path}: file contains no rows")
    first_numeric = all(_parse_float(cell) is not None for cell in rows[0])
    if first_numeric:
        return None, rows
    return rows[0], rows[1:]


def read_dataset(path: str | Path) -> Dataset:
    """Read and validate an all-numeric dataset.

    Error messages use 1-based file coordinates, counting the header row.
    """
    header, rows = read_rows(path)
    if not rows:
        raise MalformedTable(f"{path}: no data rows below the header")
    offset = 2 if header is not None else 1
    width = len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MalformedTable(
                f"{path}: row {i + offset} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            value = _parse_float(cell)
            if value is None or not math.isfinite(value):
                raise MalformedTable(
                    f"{path}: row {i + offset}, column {j + 1}: "
                    f"{cell.strip()!r} is not a finite real"
                )
            values[i, j] = value
    columns = tuple(h.strip() for h in header) if header is not None else None
    return Dataset(values, columns)


def format_cell(value: object) -> str:
    """Lossless cell text: repr for floats, str for everything else."""
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _atomic_write(path: str | Path, writer) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer(fh)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def write_rows(
    path: str | Path,
    rows: Iterable[Sequence[object]],
    header: Sequence[str] | None = None,
) -> None:
    """Write a CSV atomically; cells formatted with :func:`format_cell`."""
    rows = [list(row) for row in rows]

    def writer(fh):
        out = csv.writer(fh, lineterminator="\n")
        if header is not None:
            out.writerow([str(h) for h in header])
        for row in rows:
            out.writerow([format_cell(cell) for cell in row])

    _atomic_write(path, writer)


def write_json(path: str | Path, payload: dict) -> None:
    """Write a JSON document atomically with a stable key order."""
    text = json.dumps(payload, indent=2, sort_keys=False, allow_nan=False)

    def writer(fh):
        fh.write(text)
        fh.write("\n")

    _atomic_write(path, writer)
