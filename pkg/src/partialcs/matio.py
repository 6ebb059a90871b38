"""Plain-text matrix files.

Layout: a header line ``rows cols`` followed by ``rows`` lines holding
``cols`` whitespace-separated decimal floats. Vectors are stored as
``n x 1`` matrices; readers also accept a ``1 x n`` row.
"""
from __future__ import annotations

import io
import os

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput

__all__ = ["parse_matrix", "format_matrix", "read_matrix", "write_matrix", "read_vector", "write_vector"]


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DimensionMismatch("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise DimensionMismatch("header must be 'rows cols'")
    rows, cols = int(header[0]), int(header[1])
    if rows < 0 or cols < 0:
        raise DimensionMismatch("negative dimensions")
    body = lines[1:]
    if len(body) != rows:
        raise DimensionMismatch(f"expected {rows} data lines, found {len(body)}")
    out = np.zeros((rows, cols))
    for i, ln in enumerate(body):
        fields = ln.split()
        if len(fields) != cols:
            raise DimensionMismatch(f"line {i + 2}: expected {cols} values, found {len(fields)}")
        for j, f in enumerate(fields):
            low = f.lower()
            if "nan" in low or "inf" in low:
                raise NonFiniteInput(f"line {i + 2}: non-finite value {f!r}")
            out[i, j] = float(f)
    return out


def format_matrix(m) -> str:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("refusing to write NaN/Inf")
    buf = io.StringIO()
    buf.write(f"{a.shape[0]} {a.shape[1]}\n")
    for row in a:
        buf.write(" ".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def read_matrix(path: str | os.PathLike) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def write_matrix(path: str | os.PathLike, m) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_matrix(m))


def read_vector(path: str | os.PathLike) -> np.ndarray:
    a = read_matrix(path)
    if a.ndim == 2 and min(a.shape) > 1:
        raise DimensionMismatch(f"expected a vector file, got shape {a.shape}")
    return a.reshape(-1)


def write_vector(path: str | os.PathLike, v) -> None:
    write_matrix(path, np.asarray(v, dtype=np.float64).reshape(-1, 1))
