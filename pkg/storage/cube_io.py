# storage/cube_io.py
# Raw band-sequential cube files (<name>.hdr.json + <name>.raw) and signature CSVs

import csv
import logging
import os

import numpy as np
from pydantic import ValidationError

from models.cube import CubeHeader, HyperCube, SignatureSet
from utils.errors import CubeFormatError, CubeIOError

logger = logging.getLogger(__name__)

RAW_DTYPE = np.dtype('<f4')


def cube_paths(stem):
    """Header and data paths for a cube stem: img -> (img.hdr.json, img.raw)"""
    return f"{stem}.hdr.json", f"{stem}.raw"


def parse_header(text):
    try:
        return CubeHeader.model_validate_json(text)
    except ValidationError as e:
        raise CubeFormatError(f"invalid cube header: {e.errors()[0]['msg']}") from e


def serialize_header(header):
    return header.model_dump_json(indent=2) + "\n"


def load_cube(header_path, data_path):
    """
    Load a cube written by save_cube (or any headerless float32 LE BSQ file).

    Raises:
        CubeIOError: file cannot be read
        CubeFormatError: bad header, wrong data size, or a non-finite value
    """
    try:
        with open(header_path, 'r', encoding='utf-8') as f:
            header = parse_header(f.read())
        with open(data_path, 'rb') as f:
            raw = f.read()
    except OSError as e:
        raise CubeIOError(f"cannot read {e.filename or header_path}: {e.strerror or e}") from e

    if len(raw) != header.data_bytes:
        raise CubeFormatError(
            f"{data_path}: expected {header.data_bytes} bytes "
            f"({header.width}x{header.height}x{header.bands} float32), got {len(raw)}"
        )

    flat = np.frombuffer(raw, dtype=RAW_DTYPE)
    finite = np.isfinite(flat)
    if not finite.all():
        first = int(np.flatnonzero(~finite)[0])
        raise CubeFormatError(f"{data_path}: non-finite value at index {first}")

    data = flat.astype(np.float32).reshape(header.bands, header.pixels)
    logger.debug("loaded cube %s: %dx%dx%d", data_path, header.width, header.height, header.bands)
    return HyperCube(width=header.width, height=header.height, bands=header.bands, data=data)


def save_cube(cube, header_path, data_path):
    """Write header JSON and raw little-endian float32 band-sequential data."""
    try:
        with open(header_path, 'w', encoding='utf-8') as f:
            f.write(serialize_header(cube.header()))
        with open(data_path, 'wb') as f:
            f.write(cube.data.astype(RAW_DTYPE, copy=False).tobytes(order='C'))
    except OSError as e:
        raise CubeIOError(f"cannot write {e.filename or data_path}: {e.strerror or e}") from e
    logger.debug("saved cube %s (%d bytes)", data_path, cube.header().data_bytes)


def load_signatures_csv(path):
    """
    Read spectra from CSV.

    Layout: first row holds the band count M; every following row is a
    name followed by M nonnegative values.
    """
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    except OSError as e:
        raise CubeIOError(f"cannot read {path}: {e.strerror or e}") from e

    if not rows:
        raise CubeFormatError(f"{path}: empty signature file")
    try:
        bands = int(rows[0][0])
    except ValueError as e:
        raise CubeFormatError(f"{path}: first row must be the band count, got {rows[0][0]!r}") from e

    names, spectra = [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != bands + 1:
            raise CubeFormatError(f"{path}:{line_no}: expected name + {bands} values, got {len(row)} fields")
        names.append(row[0].strip())
        try:
            spectra.append([float(v) for v in row[1:]])
        except ValueError as e:
            raise CubeFormatError(f"{path}:{line_no}: {e}") from e

    if not spectra:
        raise CubeFormatError(f"{path}: no spectra")
    try:
        return SignatureSet(spectra=np.array(spectra), names=names)
    except ValidationError as e:
        raise CubeFormatError(f"{path}: {e.errors()[0]['msg']}") from e


def save_signatures_csv(sigs, path):
    try:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow([sigs.bands])
            for name, spectrum in zip(sigs.names, sigs.spectra):
                writer.writerow([name] + [repr(float(v)) for v in spectrum])
    except OSError as e:
        raise CubeIOError(f"cannot write {path}: {e.strerror or e}") from e


def ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
