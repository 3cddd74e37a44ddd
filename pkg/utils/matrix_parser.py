# utils/matrix_parser.py
# Read square matrices from inline text ("1,1;1,3"), CSV files and raw float files

import csv
import os
import re

import numpy as np

from models.linalg import SymMatrix
from utils.errors import CubeFormatError, CubeIOError

RAW_DTYPES = {'f32': '<f4', 'f64': '<f8'}


def clean_matrix_text(raw):
    """
    Normalize inline matrix text.

    Accepts rows separated by ';' or newlines and values separated by
    commas or whitespace; surrounding brackets and blank rows are dropped.
    """
    cleaned = raw.strip()
    cleaned = re.sub(r'^[\[(]+|[\])]+$', '', cleaned)
    rows = []
    for line in re.split(r'[;\n]', cleaned):
        line = line.strip().strip('[]()').strip()
        if line:
            rows.append([v for v in re.split(r'[,\s]+', line) if v])
    return rows


def rows_to_array(rows, source='matrix'):
    """Turn a list of string rows into a square float64 array."""
    if not rows:
        raise CubeFormatError(f"{source}: no values")
    size = len(rows)
    for k, row in enumerate(rows, start=1):
        if len(row) != size:
            raise CubeFormatError(f"{source}: row {k} has {len(row)} values, expected {size} (square matrix)")
    try:
        return np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError as e:
        raise CubeFormatError(f"{source}: {e}") from e


def parse_matrix_text(text):
    """"1,0;0,2" -> SymMatrix; raises SymmetryError for an asymmetric input."""
    return SymMatrix.from_array(rows_to_array(clean_matrix_text(text), 'inline matrix'))


def load_matrix_csv(path):
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            rows = [[cell.strip() for cell in row if cell.strip()] for row in csv.reader(f)]
    except OSError as e:
        raise CubeIOError(f"cannot read {path}: {e.strerror or e}") from e
    rows = [row for row in rows if row]
    return SymMatrix.from_array(rows_to_array(rows, path))


def load_matrix_raw(path, dim, dtype='f64'):
    """Raw little-endian row-major dim x dim matrix."""
    if dtype not in RAW_DTYPES:
        raise ValueError(f"raw dtype must be one of {', '.join(RAW_DTYPES)}, got {dtype!r}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    try:
        values = np.fromfile(path, dtype=RAW_DTYPES[dtype])
    except OSError as e:
        raise CubeIOError(f"cannot read {path}: {e.strerror or e}") from e
    if values.size != dim * dim:
        raise CubeFormatError(f"{path}: expected {dim * dim} values for a {dim}x{dim} matrix, got {values.size}")
    if not np.isfinite(values).all():
        first = int(np.flatnonzero(~np.isfinite(values))[0])
        raise CubeFormatError(f"{path}: non-finite value at index {first}")
    return SymMatrix.from_array(values.reshape(dim, dim).astype(np.float64))


def load_matrix(source):
    """Inline text, or a path to a CSV file."""
    if os.path.isfile(source):
        return load_matrix_csv(source)
    if re.fullmatch(r'[\s\d.,;eE+\-\[\]()]+', source):
        return parse_matrix_text(source)
    raise CubeIOError(f"cannot read {source}: no such file")
