"""SLIC superpixels, co-segmentation of two rasters, and mean-feature extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.csgraph import connected_components

from .raster import Raster

SLIC_ITERS = 10


@dataclass(frozen=True)
class SegmentationMap:
    """Per-pixel labels in [1, count]; each label forms a 4-connected region."""

    height: int
    width: int
    count: int
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.labels.shape != (self.height, self.width):
            raise ValueError("label array shape mismatch")
        self.labels.setflags(write=False)

    def region_sizes(self) -> np.ndarray:
        return np.bincount(self.labels.ravel() - 1, minlength=self.count)


def _relabel_contiguous(labels: np.ndarray) -> SegmentationMap:
    uniq, inv = np.unique(labels, return_inverse=True)
    out = (inv + 1).reshape(labels.shape).astype(np.int64)
    return SegmentationMap(labels.shape[0], labels.shape[1], len(uniq), out)


def _connected_regions(code: np.ndarray) -> np.ndarray:
    """Split equal-valued 4-connected groups of `code` into distinct labels."""
    m, n = code.shape
    idx = np.arange(m * n).reshape(m, n)
    rows, cols = [], []
    horiz = code[:, :-1] == code[:, 1:]
    rows.append(idx[:, :-1][horiz])
    cols.append(idx[:, 1:][horiz])
    vert = code[:-1, :] == code[1:, :]
    rows.append(idx[:-1, :][vert])
    cols.append(idx[1:, :][vert])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = sparse.coo_matrix(
        (np.ones(len(r), dtype=np.int8), (r, c)), shape=(m * n, m * n)
    )
    _, comp = connected_components(graph, directed=False)
    return comp.reshape(m, n)


def slic(r: Raster, target_count: int, compactness: float, seed: int = 0) -> SegmentationMap:
    """Grid-initialized SLIC with fixed iteration count and connectivity cleanup.

    Deterministic for a fixed seed (the procedure itself has no randomness).
    Distance is d_color + (compactness / S) * d_spatial with Euclidean norms
    over all channels.
    """
    m, n = r.height, r.width
    if not 1 <= target_count <= m * n:
        raise ValueError(f"target_count={target_count} out of range [1, {m * n}]")
    if compactness <= 0:
        raise ValueError("compactness must be > 0")

    data = r.data.astype(np.float64)
    spacing = np.sqrt(m * n / target_count)
    n_rows = max(1, int(round(m / spacing)))
    n_cols = max(1, int(round(n / spacing)))

    cy = (np.arange(n_rows) + 0.5) * m / n_rows
    cx = (np.arange(n_cols) + 0.5) * n / n_cols
    centers_pos = np.array([(y, x) for y in cy for x in cx])
    centers_col = np.array(
        [data[min(int(y), m - 1), min(int(x), n - 1)] for y, x in centers_pos]
    )
    k = len(centers_pos)
    win = int(np.ceil(2 * spacing))
    yy, xx = np.mgrid[0:m, 0:n].astype(np.float64)

    assign = np.zeros((m, n), dtype=np.int64)
    for _ in range(SLIC_ITERS):
        best = np.full((m, n), np.inf)
        for ci in range(k):
            y0 = max(0, int(centers_pos[ci, 0]) - win)
            y1 = min(m, int(centers_pos[ci, 0]) + win + 1)
            x0 = max(0, int(centers_pos[ci, 1]) - win)
            x1 = min(n, int(centers_pos[ci, 1]) + win + 1)
            patch = data[y0:y1, x0:x1]
            d_color = np.sqrt(((patch - centers_col[ci]) ** 2).sum(axis=2))
            d_spatial = np.sqrt(
                (yy[y0:y1, x0:x1] - centers_pos[ci, 0]) ** 2
                + (xx[y0:y1, x0:x1] - centers_pos[ci, 1]) ** 2
            )
            d = d_color + (compactness / spacing) * d_spatial
            better = d < best[y0:y1, x0:x1]
            best[y0:y1, x0:x1][better] = d[better]
            assign[y0:y1, x0:x1][better] = ci
        for ci in range(k):
            mask = assign == ci
            if mask.any():
                centers_pos[ci] = (yy[mask].mean(), xx[mask].mean())
                centers_col[ci] = data[mask].mean(axis=0)

    # Connectivity: keep each cluster's largest component, merge orphan
    # components into the adjacent kept region with the most pixels.
    comp = _connected_regions(assign)
    n_comp = comp.max() + 1
    comp_sizes = np.bincount(comp.ravel(), minlength=n_comp)
    comp_cluster = np.full(n_comp, -1, dtype=np.int64)
    comp_cluster[comp.ravel()] = assign.ravel()
    keep = np.zeros(n_comp, dtype=bool)
    for ci in range(k):
        members = np.flatnonzero(comp_cluster == ci)
        if len(members):
            keep[members[np.argmax(comp_sizes[members])]] = True

    final = np.where(keep[comp], comp, -1)
    # Iteratively absorb orphan pixels into the largest adjacent kept region.
    while (final < 0).any():
        grown = ndimage.grey_dilation(final, size=3, mode="constant", cval=-1)
        orphan = final < 0
        candidates = np.where(orphan, grown, final)
        # Prefer the largest neighboring region among the 4-neighbors.
        best_nb = np.full(final.shape, -1, dtype=np.int64)
        best_sz = np.full(final.shape, -1, dtype=np.int64)
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = np.full(final.shape, -1, dtype=np.int64)
            if dy == 1:
                nb[1:, :] = final[:-1, :]
            elif dy == -1:
                nb[:-1, :] = final[1:, :]
            elif dx == 1:
                nb[:, 1:] = final[:, :-1]
            else:
                nb[:, :-1] = final[:, 1:]
            sz = np.where(nb >= 0, comp_sizes[np.maximum(nb, 0)], -1)
            upd = orphan & (sz > best_sz)
            best_nb[upd] = nb[upd]
            best_sz[upd] = sz[upd]
        progressed = orphan & (best_nb >= 0)
        if not progressed.any():
            final[orphan] = candidates[orphan]
            break
        final[progressed] = best_nb[progressed]
    return _relabel_contiguous(final)


def cosegment(a: SegmentationMap, b: SegmentationMap, min_region: int = 10) -> SegmentationMap:
    """Intersect two partitions into a common refinement.

    Connected components of identical (a, b) label pairs become regions;
    regions smaller than min_region pixels are absorbed into the adjacent
    region sharing the longest boundary (ties: lowest label).
    """
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError("segmentation dimensions differ")
    code = a.labels.astype(np.int64) * (b.count + 1) + b.labels
    comp = _connected_regions(code)

    if min_region > 1:
        comp = _absorb_small(comp, min_region)
    return _relabel_contiguous(comp)


def _boundary_pairs(labels: np.ndarray):
    h1 = labels[:, :-1].ravel()
    h2 = labels[:, 1:].ravel()
    v1 = labels[:-1, :].ravel()
    v2 = labels[1:, :].ravel()
    p = np.concatenate([h1, v1])
    q = np.concatenate([h2, v2])
    diff = p != q
    return p[diff], q[diff]


def _absorb_small(labels: np.ndarray, min_region: int) -> np.ndarray:
    labels = labels.copy()
    while True:
        n_lab = labels.max() + 1
        sizes = np.bincount(labels.ravel(), minlength=n_lab)
        small = np.flatnonzero((sizes > 0) & (sizes < min_region))
        if len(small) == 0 or (sizes > 0).sum() <= 1:
            return labels
        p, q = _boundary_pairs(labels)
        # Boundary length between each ordered region pair.
        pair_codes = np.concatenate([p * n_lab + q, q * n_lab + p])
        uniq, counts = np.unique(pair_codes, return_counts=True)
        changed = False
        # Absorb the smallest region first; recompute after each pass.
        for lab in small[np.argsort(sizes[small], kind="stable")]:
            mask = (uniq // n_lab) == lab
            if not mask.any():
                continue
            neighbors = uniq[mask] % n_lab
            shared = counts[mask]
            best = np.max(shared)
            target = int(np.min(neighbors[shared == best]))
            labels[labels == lab] = target
            changed = True
            break
        if not changed:
            return labels


def extract_features(r: Raster, seg: SegmentationMap) -> np.ndarray:
    """Per-superpixel channel means: rows = superpixels, cols = channels."""
    if (r.height, r.width) != (seg.height, seg.width):
        raise ValueError("raster/segmentation dimensions differ")
    flat_lab = seg.labels.ravel() - 1
    counts = np.bincount(flat_lab, minlength=seg.count).astype(np.float64)
    feats = np.empty((seg.count, r.channels), dtype=np.float64)
    for c in range(r.channels):
        sums = np.bincount(flat_lab, weights=r.data[:, :, c].ravel().astype(np.float64),
                           minlength=seg.count)
        feats[:, c] = sums / counts
    return feats
