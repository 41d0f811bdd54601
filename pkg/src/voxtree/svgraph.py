"""Super-voxel adjacency graph with chi-squared histogram edge weights.

Each node carries a 64-bin probability histogram of its voxel intensities
over the volume's full scalar range. Edges connect 6-adjacent super-voxels
and are pre-sorted by the total order (weight, a, b), which every downstream
consumer relies on for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .supervoxels import SuperVoxelLabeling
from .volume import ScalarVolume

HISTOGRAM_BINS = 64


@dataclass
class AdjacencyGraph:
    node_count: int
    node_sizes: np.ndarray             # float64; voxels or 1.0 per node
    edges_a: np.ndarray                # uint32, a < b
    edges_b: np.ndarray
    edges_w: np.ndarray                # float64, sorted with (w, a, b)
    histograms: np.ndarray | None = None   # (node_count, 64), rows sum to 1
    size_units: str = "voxels"

    @property
    def edge_count(self) -> int:
        return len(self.edges_w)

    def edges(self):
        return zip(self.edges_a.tolist(), self.edges_b.tolist(), self.edges_w.tolist())

    def to_bytes(self) -> bytes:
        """edges.bin layout: repeated (u32 a, u32 b, f32 weight), little-endian."""
        rec = np.zeros(self.edge_count, dtype=[("a", "<u4"), ("b", "<u4"), ("w", "<f4")])
        rec["a"] = self.edges_a
        rec["b"] = self.edges_b
        rec["w"] = self.edges_w
        return rec.tobytes()


def intensity_histograms(vol: ScalarVolume, labeling: SuperVoxelLabeling,
                         bins: int = HISTOGRAM_BINS) -> np.ndarray:
    """Per-super-voxel probability histograms over the full scalar range."""
    lo, hi = vol.meta.scalar_range
    values = vol.data.astype(np.float64)
    if hi > lo:
        bin_idx = np.floor((values - lo) / (hi - lo) * bins).astype(np.int64)
        np.clip(bin_idx, 0, bins - 1, out=bin_idx)
    else:
        bin_idx = np.zeros(values.shape, dtype=np.int64)
    combined = labeling.labels.astype(np.int64) * bins + bin_idx
    counts = np.bincount(combined, minlength=labeling.count * bins).reshape(
        labeling.count, bins
    )
    totals = counts.sum(axis=1, keepdims=True)
    return counts / totals


def chi_squared_distance(h1: np.ndarray, h2: np.ndarray) -> float:
    """0.5 * sum (h1-h2)^2 / (h1+h2), empty bins skipped; range [0, 1]."""
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    s = h1 + h2
    nz = s > 0
    d = h1[nz] - h2[nz]
    return float(0.5 * np.sum(d * d / s[nz]))


def _adjacent_pairs(labels3: np.ndarray) -> np.ndarray:
    """Unique (a, b) label pairs sharing at least one voxel face, a < b."""
    pairs = []
    for axis in range(3):
        a = np.moveaxis(labels3, axis, 0)[:-1].reshape(-1)
        b = np.moveaxis(labels3, axis, 0)[1:].reshape(-1)
        diff = a != b
        if np.any(diff):
            lo = np.minimum(a[diff], b[diff])
            hi = np.maximum(a[diff], b[diff])
            pairs.append(np.stack([lo, hi], axis=1))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.concatenate(pairs, axis=0), axis=0)


def build_adjacency_graph(vol: ScalarVolume, labeling: SuperVoxelLabeling,
                          size_units: str = "voxels",
                          bins: int = HISTOGRAM_BINS) -> AdjacencyGraph:
    """Build the weighted region adjacency graph of a labeled volume."""
    if size_units not in ("voxels", "nodes"):
        raise ValueError("size_units must be 'voxels' or 'nodes'")
    hists = intensity_histograms(vol, labeling, bins=bins)
    pairs = _adjacent_pairs(labeling.as_3d().astype(np.int64))
    ha = hists[pairs[:, 0]]
    hb = hists[pairs[:, 1]]
    s = ha + hb
    d = ha - hb
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(s > 0, d * d / np.where(s > 0, s, 1.0), 0.0)
    weights = 0.5 * terms.sum(axis=1)

    order = np.lexsort((pairs[:, 1], pairs[:, 0], weights))
    if size_units == "voxels":
        sizes = labeling.voxel_counts.astype(np.float64)
    else:
        sizes = np.ones(labeling.count, dtype=np.float64)
    return AdjacencyGraph(
        node_count=labeling.count,
        node_sizes=sizes,
        edges_a=pairs[order, 0].astype(np.uint32),
        edges_b=pairs[order, 1].astype(np.uint32),
        edges_w=weights[order],
        histograms=hists,
        size_units=size_units,
    )


def graph_from_edge_list(node_sizes, edge_list) -> AdjacencyGraph:
    """Assemble a graph from (a, b, w) triples; normalizes a < b and sorts."""
    sizes = np.asarray(node_sizes, dtype=np.float64)
    if len(edge_list):
        arr = np.array([(min(a, b), max(a, b), w) for a, b, w in edge_list],
                       dtype=np.float64)
        a, b, w = arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]
        keep = np.unique(np.stack([a, b], axis=1), axis=0, return_index=True)[1]
        a, b, w = a[keep], b[keep], w[keep]
        order = np.lexsort((b, a, w))
        a, b, w = a[order], b[order], w[order]
    else:
        a = b = np.zeros(0, dtype=np.int64)
        w = np.zeros(0, dtype=np.float64)
    return AdjacencyGraph(node_count=len(sizes), node_sizes=sizes,
                          edges_a=a.astype(np.uint32), edges_b=b.astype(np.uint32),
                          edges_w=w)
