"""Multiband raster container with bit-exact file I/O and PCA band reduction.

A raster on disk is a two-part container: ``<name>.hdr.json`` holding the
dimensions/dtype and ``<name>.<ext>`` holding the raw little-endian payload.
Float rasters are stored pixel-major, band-interleaved ("row-major-bip");
single-band integer maps (segmentations, binary change maps) are plain
row-major.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

_DTYPES = {
    "f32le": (np.dtype("<f4"), "f32"),
    "u32le": (np.dtype("<u4"), "u32"),
    "u8": (np.dtype("u1"), "u8"),
}


@dataclass(frozen=True)
class Raster:
    """An M x N x C cube of finite float32 values."""

    height: int
    width: int
    channels: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.channels < 1:
            raise ValueError("raster dimensions must be >= 1")
        expected = (self.height, self.width, self.channels)
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} != {expected}")
        if self.data.dtype != np.float32:
            raise ValueError("raster data must be float32")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("raster contains non-finite values")
        self.data.setflags(write=False)

    @classmethod
    def from_array(cls, arr) -> "Raster":
        arr = np.asarray(arr, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError("expected a 2-D or 3-D array")
        return cls(arr.shape[0], arr.shape[1], arr.shape[2], arr.copy())


def _strip_suffix(path: str) -> str:
    for suf in (".hdr.json", ".f32", ".u32", ".u8"):
        if path.endswith(suf):
            return path[: -len(suf)]
    return path


def _write_container(base: str, arr: np.ndarray, dtype_name: str, layout: str) -> None:
    dtype, ext = _DTYPES[dtype_name]
    base = _strip_suffix(base)
    if arr.ndim == 2:
        m, n = arr.shape
        c = 1
    else:
        m, n, c = arr.shape
    header = {"m": int(m), "n": int(n), "c": int(c), "dtype": dtype_name, "layout": layout}
    with open(base + ".hdr.json", "w") as fh:
        json.dump(header, fh)
        fh.write("\n")
    arr.astype(dtype, copy=False).tofile(base + "." + ext)


def _read_container(base: str):
    base = _strip_suffix(base)
    hdr_path = base + ".hdr.json"
    if not os.path.exists(hdr_path):
        raise FileNotFoundError(hdr_path)
    with open(hdr_path) as fh:
        header = json.load(fh)
    dtype_name = header["dtype"]
    if dtype_name not in _DTYPES:
        raise ValueError(f"unknown dtype {dtype_name!r} in {hdr_path}")
    dtype, ext = _DTYPES[dtype_name]
    payload_path = base + "." + ext
    if not os.path.exists(payload_path):
        raise FileNotFoundError(payload_path)
    m, n, c = header["m"], header["n"], header["c"]
    raw = np.fromfile(payload_path, dtype=dtype)
    if raw.size != m * n * c:
        raise ValueError(
            f"header claims {m}x{n}x{c} = {m * n * c} values, payload holds {raw.size}"
        )
    return header, raw.reshape(m, n, c)


def load_raster(path: str) -> Raster:
    """Load a float32 raster; inverse of :func:`save_raster` bit-exactly."""
    header, arr = _read_container(path)
    if header["dtype"] != "f32le":
        raise ValueError(f"expected f32le raster, got {header['dtype']}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("raster file contains non-finite values")
    return Raster(header["m"], header["n"], header["c"], np.ascontiguousarray(arr))


def save_raster(r: Raster, path: str) -> None:
    _write_container(path, r.data, "f32le", "row-major-bip")


def save_label_map(labels: np.ndarray, path: str) -> None:
    """Store an M x N integer label map as a u32le single-band container."""
    _write_container(path, np.asarray(labels, dtype=np.uint32), "u32le", "row-major")


def load_label_map(path: str) -> np.ndarray:
    header, arr = _read_container(path)
    if header["dtype"] != "u32le" or header["c"] != 1:
        raise ValueError("expected a u32le single-band label map")
    return arr[:, :, 0].astype(np.int64)


def save_binary_map(bcm: np.ndarray, path: str) -> None:
    """Store an M x N {0,1} map as a u8 single-band container."""
    bcm = np.asarray(bcm)
    if not np.isin(bcm, (0, 1)).all():
        raise ValueError("binary map values must be 0 or 1")
    _write_container(path, bcm.astype(np.uint8), "u8", "row-major")


def load_binary_map(path: str) -> np.ndarray:
    header, arr = _read_container(path)
    if header["dtype"] != "u8" or header["c"] != 1:
        raise ValueError("expected a u8 single-band binary map")
    out = arr[:, :, 0].astype(np.uint8)
    if not np.isin(out, (0, 1)).all():
        raise ValueError("binary map values must be 0 or 1")
    return out


def pca_reduce(r: Raster, k: int) -> Raster:
    """Project per-pixel channel vectors onto the top-k principal components.

    Components are ordered by descending explained variance; each component's
    sign is fixed so its largest-magnitude loading is positive.
    """
    if not 1 <= k <= r.channels:
        raise ValueError(f"k={k} out of range [1, {r.channels}]")
    if r.height * r.width < 2:
        raise ValueError("PCA requires at least 2 pixels")
    flat = r.data.reshape(-1, r.channels).astype(np.float64)
    centered = flat - flat.mean(axis=0)
    cov = centered.T @ centered / (flat.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    comps = evecs[:, order]
    for j in range(comps.shape[1]):
        i_max = np.argmax(np.abs(comps[:, j]))
        if comps[i_max, j] < 0:
            comps[:, j] = -comps[:, j]
    scores = centered @ comps
    return Raster(r.height, r.width, k, scores.reshape(r.height, r.width, k).astype(np.float32))


def export_graymap(values: np.ndarray, path: str) -> None:
    """Write per-pixel values as a binary PGM (P5), min-max scaled to 0-255.

    Constant input maps to all-zero; rounding is half-away-from-zero.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("graymap values must be 2-D")
    lo, hi = values.min(), values.max()
    if hi > lo:
        scaled = (values - lo) / (hi - lo) * 255.0
    else:
        scaled = np.zeros_like(values)
    pix = np.trunc(scaled + 0.5).astype(np.uint8)
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
