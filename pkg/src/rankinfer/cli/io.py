"""CSV ingestion and atomic file output for the command line.

Dialect is fixed: comma separator, first row is the header, UTF-8,
'.' decimal point. No locale handling, no quoting surprises beyond
what the csv module does by default.
"""
from __future__ import annotations

import csv
import io
import os
import sys
import tempfile

import numpy as np

from ..errors import CsvFormatError, InputError, MissingColumn, MissingValues, NonFinite

# Cells treated as missing data (domain error), as opposed to garbage
# like "abc" (format error).
_MISSING = {"", "NA", "NaN", "nan"}


class TableData:
    """Rectangular table of raw string cells keyed by column name."""

    def __init__(self, names: tuple[str, ...], rows: list[list[str]]):
        self.names = names
        self.n = len(rows)
        self._columns = {
            name: [row[i] for row in rows] for i, name in enumerate(names)
        }

    def has(self, name: str) -> bool:
        return name in self._columns

    def _cells(self, name: str) -> list[str]:
        try:
            return self._columns[name]
        except KeyError:
            raise MissingColumn(
                f"no column {name!r}; available: {', '.join(self.names)}"
            ) from None

    def raw(self, name: str) -> np.ndarray:
        """Column as strings (categorical use: group labels, names)."""
        return np.asarray(self._cells(name), dtype=object)

    def numeric(self, name: str) -> np.ndarray:
        cells = self._cells(name)
        out = np.empty(len(cells))
        for i, cell in enumerate(cells):
            token = cell.strip()
            if token in _MISSING:
                # row numbers reported 1-based counting the header line
                raise MissingValues(
                    f"column {name!r} has a missing value at row {i + 2}"
                )
            try:
                out[i] = float(token)
            except ValueError:
                raise CsvFormatError(
                    f"column {name!r} has a non-numeric cell {cell!r} at row {i + 2}"
                ) from None
        if not np.all(np.isfinite(out)):
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            raise NonFinite(
                f"column {name!r} has a non-finite value at row {bad + 2}"
            )
        return out


def parse_table(text: str) -> TableData:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("empty input: expected a header row") from None
    names = tuple(h.strip() for h in header)
    if not names or all(name == "" for name in names):
        raise CsvFormatError("empty input: expected a header row")
    seen = set()
    for name in names:
        if name in seen:
            raise CsvFormatError(f"duplicate column name {name!r} in header")
        seen.add(name)
    rows: list[list[str]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue  # blank line, e.g. trailing newline
        if len(row) != len(names):
            raise CsvFormatError(
                f"row {lineno} has {len(row)} fields, expected {len(names)}"
            )
        rows.append(row)
    return TableData(names, rows)


def read_bytes(path: str) -> bytes:
    """Read a CSV source; '-' means stdin."""
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def decode(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CsvFormatError(f"input is not valid UTF-8: {exc}") from exc


def read_covariance(text: str, p: int) -> np.ndarray:
    """Full covariance matrix CSV: header row (names ignored), then p
    rows of p numeric fields."""
    table = parse_table(text)
    if len(table.names) != p or table.n != p:
        raise CsvFormatError(
            f"covariance file must be {p}x{p} to match the estimates, "
            f"got {table.n}x{len(table.names)}"
        )
    cols = [table.numeric(name) for name in table.names]
    return np.column_stack(cols)


def write_text(path: str | None, text: str) -> None:
    """Write to stdout, or atomically to a file (temp + rename)."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = os.path.abspath(path)
    directory = os.path.dirname(target)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rankinfer-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
