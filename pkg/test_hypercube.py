# test_hypercube.py
# Cube files, signature library, synthetic scenes and PGM rendering
# Usage: pytest test_hypercube.py   (or: python test_hypercube.py)

import math
import sys

import numpy as np
import pytest
from pydantic import ValidationError

from models.cube import HyperCube, Projection, SignatureSet
from services.synthetic_service import builtin_signatures, generate_synthetic, spectral_angles, synthesize
from storage.cube_io import cube_paths, load_cube, load_signatures_csv, save_cube, save_signatures_csv
from storage.exports import load_projection_scores, read_pgm, render_band_pgm, save_projection
from utils.errors import CubeFormatError, CubeIOError


def _random_cube(width, height, bands, seed=0):
    data = np.random.default_rng(seed).normal(size=(bands, width * height)).astype(np.float32)
    return HyperCube(width=width, height=height, bands=bands, data=data)


def _write_raw(tmp_path, header, values):
    header_path, data_path = cube_paths(str(tmp_path / "cube"))
    with open(header_path, 'w', encoding='utf-8') as f:
        f.write(header)
    np.asarray(values, dtype='<f4').tofile(data_path)
    return header_path, data_path


# ─────────────────────────────────────────────────
# Cube files
# ─────────────────────────────────────────────────

def test_band_sequential_layout(tmp_path):
    paths = _write_raw(tmp_path, '{"width": 2, "height": 1, "bands": 2}', [1.0, 2.0, 3.0, 4.0])
    cube = load_cube(*paths)
    np.testing.assert_array_equal(cube.band(0), [1.0, 2.0])
    np.testing.assert_array_equal(cube.band(1), [3.0, 4.0])
    assert cube.value(1, 1) == 4.0


def test_short_data_file_names_sizes(tmp_path):
    paths = _write_raw(tmp_path, '{"width": 2, "height": 2, "bands": 3}', np.zeros(11))
    with pytest.raises(CubeFormatError) as err:
        load_cube(*paths)
    assert "expected 48 bytes" in str(err.value)
    assert "got 44" in str(err.value)


def test_non_finite_value_reports_first_index(tmp_path):
    values = np.zeros(8)
    values[5] = np.nan
    values[6] = np.inf
    paths = _write_raw(tmp_path, '{"width": 2, "height": 2, "bands": 2}', values)
    with pytest.raises(CubeFormatError, match="index 5"):
        load_cube(*paths)


def test_bad_header_rejected(tmp_path):
    paths = _write_raw(tmp_path, '{"width": 0, "height": 2, "bands": 2}', np.zeros(0))
    with pytest.raises(CubeFormatError):
        load_cube(*paths)


def test_missing_file_names_path(tmp_path):
    with pytest.raises(CubeIOError, match="missing.hdr.json"):
        load_cube(str(tmp_path / "missing.hdr.json"), str(tmp_path / "missing.raw"))


def test_round_trip_is_bit_exact(tmp_path):
    cube = _random_cube(8, 8, 5, seed=3)
    header_path, data_path = cube_paths(str(tmp_path / "rt"))
    save_cube(cube, header_path, data_path)
    loaded = load_cube(header_path, data_path)
    assert (loaded.width, loaded.height, loaded.bands) == (8, 8, 5)
    assert loaded.data.tobytes() == cube.data.tobytes()


def test_data_file_size(tmp_path):
    cube = HyperCube(width=100, height=100, bands=50, data=np.zeros((50, 10000), dtype=np.float32))
    header_path, data_path = cube_paths(str(tmp_path / "big"))
    save_cube(cube, header_path, data_path)
    with open(data_path, 'rb') as f:
        assert len(f.read()) == 2_000_000


def test_cube_model_rejects_bad_data():
    with pytest.raises(ValidationError):
        HyperCube(width=2, height=2, bands=1, data=np.zeros((1, 3), dtype=np.float32))
    with pytest.raises(ValidationError):
        HyperCube(width=1, height=1, bands=1, data=np.zeros((1, 1), dtype=np.float64))


# ─────────────────────────────────────────────────
# Signatures
# ─────────────────────────────────────────────────

def test_single_signature_nonnegative():
    sigs = builtin_signatures(40, 1, seed=5)
    assert sigs.count == 1
    assert (sigs.spectra >= 0).all()


def test_signatures_deterministic():
    a = builtin_signatures(50, 10, seed=7)
    b = builtin_signatures(50, 10, seed=7)
    np.testing.assert_array_equal(a.spectra, b.spectra)


def test_signatures_pairwise_distinct():
    sigs = builtin_signatures(50, 10, seed=1)
    angles = spectral_angles(sigs.spectra)
    assert angles[~np.eye(10, dtype=bool)].min() > 0.05


def test_signature_csv_round_trip(tmp_path):
    sigs = builtin_signatures(12, 3, seed=2)
    path = str(tmp_path / "sigs.csv")
    save_signatures_csv(sigs, path)
    loaded = load_signatures_csv(path)
    assert loaded.names == sigs.names
    np.testing.assert_array_equal(loaded.spectra, sigs.spectra)


def test_signature_csv_wrong_width(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("3\nrock,0.1,0.2\n", encoding='utf-8')
    with pytest.raises(CubeFormatError, match=":2:"):
        load_signatures_csv(str(path))


def test_negative_signature_rejected():
    with pytest.raises(ValidationError):
        SignatureSet(spectra=np.array([[0.1, -0.2]]), names=["x"])


# ─────────────────────────────────────────────────
# Synthetic scenes
# ─────────────────────────────────────────────────

def test_noiseless_single_endmember_is_constant():
    sigs = builtin_signatures(20, 4, seed=3)
    scene = synthesize(sigs, 6, 5, 1, math.inf, seed=9)
    expected = sigs.spectra[scene.endmember_ids[0]].astype(np.float32)
    for b in range(20):
        assert (scene.cube.band(b) == expected[b]).all()


def test_synthetic_deterministic_across_workers():
    sigs = builtin_signatures(16, 10, seed=1)
    a = generate_synthetic(sigs, 70, 70, 10, 40.0, seed=4, workers=1)
    b = generate_synthetic(sigs, 70, 70, 10, 40.0, seed=4, workers=4)
    c = generate_synthetic(sigs, 70, 70, 10, 40.0, seed=4, workers=1)
    assert a.data.tobytes() == b.data.tobytes() == c.data.tobytes()


def test_empirical_snr_close_to_target():
    sigs = builtin_signatures(50, 10, seed=1)
    scene = synthesize(sigs, 300, 300, 10, 70.0, seed=1)
    assert abs(scene.empirical_snr_db - 70.0) <= 0.5


def test_abundances_on_simplex():
    sigs = builtin_signatures(10, 5, seed=1)
    scene = synthesize(sigs, 10, 10, 5, 30.0, seed=2)
    assert (scene.abundances >= 0).all()
    np.testing.assert_allclose(scene.abundances.sum(axis=1), 1.0, rtol=1e-12)


def test_noiseless_mixture_inside_endmember_hull():
    sigs = builtin_signatures(24, 8, seed=6)
    scene = synthesize(sigs, 15, 12, 5, math.inf, seed=6)
    chosen = sigs.spectra[scene.endmember_ids]
    lo, hi = chosen.min(axis=0), chosen.max(axis=0)
    for b in range(24):
        band = scene.cube.band(b).astype(np.float64)
        slack = 1e-6 * max(abs(hi[b]), 1.0)
        assert band.min() >= lo[b] - slack
        assert band.max() <= hi[b] + slack


def test_too_many_endmembers():
    sigs = builtin_signatures(10, 3, seed=1)
    with pytest.raises(ValueError, match="exceeds"):
        generate_synthetic(sigs, 4, 4, 4, 30.0, seed=1)


# ─────────────────────────────────────────────────
# PGM rendering
# ─────────────────────────────────────────────────

def test_constant_field_is_mid_gray(tmp_path):
    path = str(tmp_path / "flat.pgm")
    render_band_pgm(np.full(6, 3.5), 3, 2, path)
    width, height, pixels = read_pgm(path)
    assert (width, height) == (3, 2)
    assert (pixels == 128).all()


def test_endpoints(tmp_path):
    path = str(tmp_path / "ends.pgm")
    render_band_pgm([0.0, 1.0], 2, 1, path)
    _, _, pixels = read_pgm(path)
    assert pixels.tolist() == [0, 255]


def test_rendering_is_monotone(tmp_path):
    values = np.random.default_rng(11).normal(size=16)
    path = str(tmp_path / "rand.pgm")
    render_band_pgm(values, 4, 4, path)
    _, _, pixels = read_pgm(path)
    order = np.argsort(values)
    assert (np.diff(pixels[order].astype(int)) >= 0).all()


def test_zero_area_rejected(tmp_path):
    with pytest.raises(ValueError):
        render_band_pgm([], 0, 3, str(tmp_path / "none.pgm"))


def test_golden_pgm_repeatable(tmp_path):
    sigs = builtin_signatures(8, 3, seed=21)
    outputs = []
    for k in range(2):
        cube = generate_synthetic(sigs, 12, 9, 3, 50.0, seed=21)
        path = tmp_path / f"golden{k}.pgm"
        render_band_pgm(cube.band(4), 12, 9, str(path))
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith(b"P5\n12 9\n255\n")


def test_pgm_bytes_row_major(tmp_path):
    path = tmp_path / "grid.pgm"
    values = np.array([0.0, 51.0, 102.0, 153.0, 204.0, 255.0])
    render_band_pgm(values, 3, 2, str(path))
    assert path.read_bytes() == b"P5\n3 2\n255\n" + bytes([0, 51, 102, 153, 204, 255])
    width, height, pixels = read_pgm(str(path))
    assert (width, height) == (3, 2)
    assert pixels.tolist() == [0, 51, 102, 153, 204, 255]


def test_read_pgm_rejects_other_files(tmp_path):
    path = tmp_path / "notes.pgm"
    path.write_text("just text\n", encoding='utf-8')
    with pytest.raises(CubeFormatError):
        read_pgm(str(path))
    with pytest.raises(CubeIOError):
        read_pgm(str(tmp_path / "missing.pgm"))


def test_projection_scores_round_trip(tmp_path):
    scores = np.random.default_rng(4).normal(size=(3, 20))
    stem = str(tmp_path / "scene")
    json_path, raw_path = save_projection(Projection(width=5, height=4, scores=scores), stem)
    assert (json_path, raw_path) == (stem + ".scores.json", stem + ".scores.raw")
    assert (tmp_path / "scene.scores.raw").stat().st_size == 3 * 20 * 4
    loaded = load_projection_scores(stem)
    assert loaded.shape == (3, 20)
    np.testing.assert_array_equal(loaded, scores.astype(np.float32))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
