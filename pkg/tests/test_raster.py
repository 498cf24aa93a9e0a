"""Raster container I/O, PCA reduction, and graymap export."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from copcd.raster import (
    Raster,
    export_graymap,
    load_binary_map,
    load_label_map,
    load_raster,
    pca_reduce,
    save_binary_map,
    save_label_map,
    save_raster,
)


def test_from_array_2d_adds_channel_axis():
    r = Raster.from_array(np.zeros((3, 4), dtype=np.float32))
    assert (r.height, r.width, r.channels) == (3, 4, 1)


def test_raster_rejects_non_finite():
    arr = np.zeros((2, 2, 1), dtype=np.float32)
    arr[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        Raster(2, 2, 1, arr)


def test_raster_rejects_wrong_shape_and_dtype():
    with pytest.raises(ValueError):
        Raster(2, 2, 2, np.zeros((2, 2, 1), dtype=np.float32))
    with pytest.raises(ValueError):
        Raster(2, 2, 1, np.zeros((2, 2, 1), dtype=np.float64))


def test_round_trip_random_raster(tmp_path):
    rng = np.random.default_rng(0)
    r = Raster.from_array(rng.normal(size=(8, 8, 3)).astype(np.float32))
    base = str(tmp_path / "r")
    save_raster(r, base)
    back = load_raster(base)
    assert back.data.dtype == np.float32
    assert np.array_equal(back.data, r.data)  # bitwise: exact float equality


def test_header_payload_mismatch_errors(tmp_path):
    base = str(tmp_path / "bad")
    with open(base + ".hdr.json", "w") as fh:
        json.dump({"m": 1, "n": 1, "c": 3, "dtype": "f32le",
                   "layout": "row-major-bip"}, fh)
    np.zeros(2, dtype="<f4").tofile(base + ".f32")
    with pytest.raises(ValueError):
        load_raster(base)


def test_missing_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_raster(str(tmp_path / "nope"))


def test_load_rejects_non_finite_payload(tmp_path):
    base = str(tmp_path / "nan")
    with open(base + ".hdr.json", "w") as fh:
        json.dump({"m": 1, "n": 1, "c": 1, "dtype": "f32le",
                   "layout": "row-major-bip"}, fh)
    np.array([np.nan], dtype="<f4").tofile(base + ".f32")
    with pytest.raises(ValueError):
        load_raster(base)


def test_zero_raster_payload_bytes(tmp_path):
    base = str(tmp_path / "z")
    save_raster(Raster.from_array(np.zeros((1, 1, 1), dtype=np.float32)), base)
    payload = open(base + ".f32", "rb").read()
    assert payload == b"\x00\x00\x00\x00"


def test_little_endian_encoding_of_one(tmp_path):
    base = str(tmp_path / "one")
    save_raster(Raster.from_array(np.ones((1, 1, 1), dtype=np.float32)), base)
    payload = open(base + ".f32", "rb").read()
    assert payload == b"\x00\x00\x80\x3f"


@settings(max_examples=25, deadline=None)
@given(hnp.arrays(np.float32, (4, 5, 2),
                  elements=st.floats(-1e6, 1e6, width=32)))
def test_round_trip_is_identity(tmp_path_factory, arr):
    tmp = tmp_path_factory.mktemp("rt")
    r = Raster.from_array(arr)
    save_raster(r, str(tmp / "r"))
    assert np.array_equal(load_raster(str(tmp / "r")).data, r.data)


def test_label_map_round_trip(tmp_path):
    labels = np.arange(1, 13).reshape(3, 4)
    base = str(tmp_path / "lab")
    save_label_map(labels, base)
    assert np.array_equal(load_label_map(base), labels)


def test_binary_map_round_trip_and_validation(tmp_path):
    bcm = np.array([[0, 1], [1, 0]], dtype=np.uint8)
    base = str(tmp_path / "b")
    save_binary_map(bcm, base)
    assert np.array_equal(load_binary_map(base), bcm)
    with pytest.raises(ValueError):
        save_binary_map(np.array([[2]]), str(tmp_path / "b2"))


# --- PCA ---


def test_pca_rank_one_explains_everything():
    rng = np.random.default_rng(1)
    direction = np.array([1.0, -2.0, 0.5])
    weights = rng.normal(size=(6, 6, 1))
    r = Raster.from_array((weights * direction).astype(np.float32))
    out = pca_reduce(r, 1)
    flat = r.data.reshape(-1, 3).astype(np.float64)
    total = ((flat - flat.mean(axis=0)) ** 2).sum()
    kept = (out.data.astype(np.float64) ** 2).sum()
    assert kept == pytest.approx(total, rel=1e-5)


def test_pca_full_rank_preserves_total_variance():
    rng = np.random.default_rng(2)
    r = Raster.from_array(rng.normal(size=(10, 10, 4)).astype(np.float32))
    out = pca_reduce(r, 4)
    flat = r.data.reshape(-1, 4).astype(np.float64)
    total = ((flat - flat.mean(axis=0)) ** 2).sum()
    assert (out.data.astype(np.float64) ** 2).sum() == pytest.approx(total, rel=1e-5)


def test_pca_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(3)
    r = Raster.from_array(rng.normal(size=(16, 16, 7)).astype(np.float32))
    out = pca_reduce(r, 2)

    flat = r.data.reshape(-1, 7).astype(np.float64)
    centered = flat - flat.mean(axis=0)
    evals, evecs = np.linalg.eigh(centered.T @ centered / (len(flat) - 1))
    order = np.argsort(evals)[::-1][:2]
    comps = evecs[:, order]
    for j in range(2):
        if comps[np.argmax(np.abs(comps[:, j])), j] < 0:
            comps[:, j] = -comps[:, j]
    expected = centered @ comps
    assert np.allclose(out.data.reshape(-1, 2), expected, atol=1e-4)


def test_pca_scores_uncorrelated_and_variance_ordered():
    rng = np.random.default_rng(4)
    r = Raster.from_array(rng.normal(size=(12, 12, 5)).astype(np.float32))
    out = pca_reduce(r, 3)
    scores = out.data.reshape(-1, 3).astype(np.float64)
    cov = np.cov(scores, rowvar=False)
    variances = np.diag(cov)
    assert np.all(np.diff(variances) <= 1e-9)
    off = cov - np.diag(variances)
    assert np.abs(off).max() < 1e-4 * variances.max()


def test_pca_k_out_of_range():
    r = Raster.from_array(np.zeros((2, 2, 2), dtype=np.float32))
    with pytest.raises(ValueError):
        pca_reduce(r, 3)
    with pytest.raises(ValueError):
        pca_reduce(r, 0)


# --- PGM export ---


def _read_pgm(path):
    with open(path, "rb") as fh:
        assert fh.readline() == b"P5\n"
        w, h = map(int, fh.readline().split())
        assert fh.readline() == b"255\n"
        return np.frombuffer(fh.read(), dtype=np.uint8).reshape(h, w)


def test_graymap_constant_is_all_zero(tmp_path):
    path = str(tmp_path / "c.pgm")
    export_graymap(np.full((3, 3), 7.5), path)
    assert (_read_pgm(path) == 0).all()


def test_graymap_binary_maps_to_extremes(tmp_path):
    path = str(tmp_path / "b.pgm")
    export_graymap(np.array([[0.0, 1.0]]), path)
    assert _read_pgm(path).tolist() == [[0, 255]]


def test_graymap_midpoint_rounds_half_away_from_zero(tmp_path):
    path = str(tmp_path / "m.pgm")
    export_graymap(np.array([[0.0, 0.5, 1.0]]), path)
    assert _read_pgm(path).tolist() == [[0, 128, 255]]
