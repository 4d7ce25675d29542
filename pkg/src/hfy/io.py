"""CSV pattern files: one pattern per row, comma separated decimals."""

import csv
import io

import numpy as np

from .exceptions import InputError


def format_float(x):
    return format(float(x), ".17g")


def read_patterns(path_or_buf, header=False):
    """Read a pattern matrix; ``header=True`` skips the first row."""
    if hasattr(path_or_buf, "read"):
        return _parse(path_or_buf, header, "<stream>")
    with open(path_or_buf, newline="") as fh:
        return _parse(fh, header, str(path_or_buf))


def _parse(fh, header, name):
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(fh), start=1):
        if header and lineno == 1:
            continue
        if not row or all(not cell.strip() for cell in row):
            continue
        values = []
        for col, cell in enumerate(row, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise InputError(f"{name}: line {lineno}, field {col}: not a number: {cell!r}")
            if not np.isfinite(values[-1]):
                raise InputError(f"{name}: line {lineno}, field {col}: non-finite value")
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise InputError(
                f"{name}: line {lineno}: expected {width} fields, got {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise InputError(f"{name}: no pattern rows")
    return np.array(rows, dtype=np.float64)


def write_patterns(X, path_or_buf=None, header=None):
    """Write ``X`` with 17 significant digits; returns the text when no target is given."""
    X = np.asarray(X, dtype=np.float64)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    for row in np.atleast_2d(X):
        writer.writerow([format_float(v) for v in row])
    text = buf.getvalue()
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
    return text
