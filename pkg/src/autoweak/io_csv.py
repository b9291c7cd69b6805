"""Headered-CSV matrix and label-file I/O.

Matrix format: first line "rows,cols", then one comma-separated row per
line, decimal point, no locale. Label format: one integer per line.
Parsers reject trailing garbage and report the offending file and row.
"""

from pathlib import Path

import numpy as np


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: missing file")
    with path.open("r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    header = lines[0].split(",")
    if len(header) != 2:
        raise ValueError(f"{path}: row 1: expected header 'rows,cols'")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"{path}: row 1: expected header 'rows,cols'") from None
    if rows < 0 or cols < 0:
        raise ValueError(f"{path}: row 1: negative dimension")
    if len(lines) < 1 + rows:
        raise ValueError(f"{path}: expected {rows} data rows, found {len(lines) - 1}")
    for extra in lines[1 + rows:]:
        if extra.strip():
            raise ValueError(f"{path}: trailing garbage after row {rows}")
    out = np.empty((rows, cols), dtype=np.float64)
    for i in range(rows):
        parts = lines[1 + i].split(",")
        if len(parts) != cols:
            raise ValueError(f"{path}: row {i + 2}: expected {cols} values, got {len(parts)}")
        try:
            out[i] = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"{path}: row {i + 2}: non-numeric value") from None
    if not np.all(np.isfinite(out)):
        bad = int(np.argwhere(~np.isfinite(out))[0][0])
        raise ValueError(f"{path}: row {bad + 2}: non-finite value")
    return out


def write_matrix(path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("matrix must be 2-D")
    with Path(path).open("w", encoding="ascii") as fh:
        fh.write(f"{values.shape[0]},{values.shape[1]}\n")
        for row in values:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_labels(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: missing file")
    values = []
    with path.open("r", encoding="ascii") as fh:
        for i, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(int(text))
            except ValueError:
                raise ValueError(f"{path}: row {i}: expected an integer label") from None
    return np.asarray(values, dtype=np.int64)


def write_labels(path, values) -> None:
    with Path(path).open("w", encoding="ascii") as fh:
        for v in np.asarray(values, dtype=np.int64):
            fh.write(f"{int(v)}\n")


def read_int_matrix(path) -> np.ndarray:
    out = read_matrix(path)
    rounded = np.rint(out)
    if not np.array_equal(rounded, out):
        raise ValueError(f"{path}: expected integer entries")
    return rounded.astype(np.int64)


def write_int_matrix(path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=np.int64)
    with Path(path).open("w", encoding="ascii") as fh:
        fh.write(f"{values.shape[0]},{values.shape[1]}\n")
        for row in values:
            fh.write(",".join(str(int(v)) for v in row))
            fh.write("\n")
