"""CSV matrix reading and writing for the command line tools.

Dialect: comma separated, '.' decimal point, no locale dependence.  An
optional single header row is auto-detected on read (first row not fully
numeric).  Values are written in scientific notation with 17 digits after
the point, which round-trips 64-bit floats exactly.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import InvalidParameterError

FLOAT_FORMAT = "{:.17e}"


def format_value(x: float) -> str:
    return FLOAT_FORMAT.format(float(x))


def write_matrix_csv(path, a, header=None) -> None:
    """Write a 2-D array as CSV; optional list of column names first."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidParameterError("only 1-D or 2-D arrays are written")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(list(header))
        for row in arr:
            writer.writerow([format_value(v) for v in row])


def _try_parse_row(cells) -> list[float] | None:
    out = []
    for cell in cells:
        text = cell.strip()
        if not text:
            return None
        try:
            out.append(float(text))
        except ValueError:
            return None
    return out


def read_matrix_csv(path) -> np.ndarray:
    """Read a numeric CSV matrix, skipping one auto-detected header row."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        raw = [row for row in reader if row and any(c.strip() for c in row)]
    if not raw:
        raise InvalidParameterError(f"{path}: no data rows")
    first = _try_parse_row(raw[0])
    start = 0
    if first is None:
        start = 1
        if len(raw) == 1:
            raise InvalidParameterError(f"{path}: header but no data rows")
    width = None
    for idx in range(start, len(raw)):
        parsed = _try_parse_row(raw[idx])
        if parsed is None:
            raise InvalidParameterError(
                f"{path}: non-numeric value in row {idx + 1}"
            )
        if width is None:
            width = len(parsed)
        elif len(parsed) != width:
            raise InvalidParameterError(
                f"{path}: row {idx + 1} has {len(parsed)} fields, expected {width}"
            )
        rows.append(parsed)
    return np.asarray(rows, dtype=float)


def read_vector_csv(path) -> np.ndarray:
    """Read a CSV holding a single row or single column of numbers."""
    arr = read_matrix_csv(path)
    if arr.shape[0] == 1 or arr.shape[1] == 1:
        return arr.reshape(-1)
    raise InvalidParameterError(
        f"{path}: expected a single row or column, got shape {arr.shape}"
    )
