# storage/exports.py
# Output files: PGM renderings, projection scores, eigen / band-mean / sweep-history CSVs

import csv
import json

import numpy as np
from PIL import Image, UnidentifiedImageError

from utils.errors import CubeFormatError, CubeIOError


def _write_bytes(path, payload):
    try:
        with open(path, 'wb') as f:
            f.write(payload)
    except OSError as e:
        raise CubeIOError(f"cannot write {path}: {e.strerror or e}") from e


def _write_rows(path, header, rows):
    try:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise CubeIOError(f"cannot write {path}: {e.strerror or e}") from e


def scale_to_gray(values):
    """Linear min->0, max->255; a constant field maps to 128."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.full(values.shape, 128, dtype=np.uint8)
    return np.rint((values - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def render_band_pgm(values, width, height, out_path):
    """Write N = width*height scalars as a binary (P5) 8-bit PGM."""
    if width < 1 or height < 1:
        raise ValueError(f"zero-area image: {width}x{height}")
    values = np.asarray(values).ravel()
    if values.size != width * height:
        raise ValueError(f"{values.size} values for a {width}x{height} image")
    if not np.isfinite(values).all():
        raise ValueError("cannot render non-finite values")

    gray = scale_to_gray(values).reshape(height, width)
    try:
        Image.fromarray(gray).save(out_path, format='PPM')
    except OSError as e:
        raise CubeIOError(f"cannot write {out_path}: {e.strerror or e}") from e


def read_pgm(path):
    """Read an 8-bit grayscale PGM; returns (width, height, uint8 pixels in row order)."""
    try:
        with Image.open(path) as im:
            if im.format != 'PPM' or im.mode != 'L':
                raise CubeFormatError(f"{path}: not an 8-bit grayscale PGM ({im.format}, {im.mode})")
            width, height = im.size
            pixels = np.asarray(im, dtype=np.uint8).ravel()
    except UnidentifiedImageError as e:
        raise CubeFormatError(f"{path}: not a PGM image") from e
    except OSError as e:
        raise CubeIOError(f"cannot read {path}: {e.strerror or e}") from e
    return width, height, pixels


def save_projection(projection, stem):
    """
    Scores as raw float32 LE, component-major, plus a JSON sidecar.

    Returns:
        (sidecar path, raw path)
    """
    raw_path, json_path = f"{stem}.scores.raw", f"{stem}.scores.json"
    scores = np.ascontiguousarray(projection.scores, dtype='<f4')
    _write_bytes(raw_path, scores.tobytes(order='C'))
    sidecar = {
        "width": projection.width,
        "height": projection.height,
        "components": projection.components,
        "dtype": "f32",
        "layout": "component-major",
        "byteorder": "le",
    }
    _write_bytes(json_path, (json.dumps(sidecar, indent=2) + "\n").encode('utf-8'))
    return json_path, raw_path


def load_projection_scores(stem):
    with open(f"{stem}.scores.json", 'r', encoding='utf-8') as f:
        sidecar = json.load(f)
    scores = np.fromfile(f"{stem}.scores.raw", dtype='<f4')
    return scores.reshape(sidecar["components"], sidecar["width"] * sidecar["height"])


def save_band_means_csv(band_means, path):
    _write_rows(path, ["band", "mean"], [(b, repr(float(m))) for b, m in enumerate(band_means)])


def save_eigen_csv(eig, path):
    """index, eigenvalue, explained-variance fraction, cumulative fraction"""
    values = np.clip(eig.eigenvalues.astype(np.float64), 0.0, None)
    total = float(values.sum())
    fractions = values / total if total > 0 else np.zeros_like(values)
    cumulative = np.cumsum(fractions) if total > 0 else np.ones_like(values)
    rows = [
        (k, repr(float(lam)), repr(float(frac)), repr(float(cum)))
        for k, (lam, frac, cum) in enumerate(zip(eig.eigenvalues, fractions, cumulative))
    ]
    _write_rows(path, ["index", "eigenvalue", "explained_fraction", "cumulative_fraction"], rows)


def load_eigen_csv(path):
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        return np.array([float(row["eigenvalue"]) for row in reader])


def save_history_csv(history, path):
    _write_rows(path, ["sweep", "offdiag_norm", "rotations"],
                [(h.sweep, repr(h.offdiag_norm), h.rotations) for h in history])
