"""Region dedup plus grouping of near-duplicate regions into meta-clusters.

Regions produced across all interval clusterings are deduplicated by their
super-voxel id set, an overlap graph weighted by voxel-level Jaccard distance
is built through an inverted index, and regions are grouped by computing a
minimum spanning forest and deleting its edges with weight >= t (single
linkage with a threshold cut).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

DEFAULT_JACCARD_THRESHOLD = 0.3

_PAIR_CHUNK = 2_000_000


@dataclass
class Region:
    supervoxels: np.ndarray            # sorted int64 ids
    voxel_size: int
    provenance: list = field(default_factory=list)   # interval indices


@dataclass
class RegionCatalog:
    regions: list
    n_supervoxels: int

    def __len__(self):
        return len(self.regions)

    def to_records(self) -> list:
        return [
            {
                "id": i,
                "supervoxels": r.supervoxels.tolist(),
                "voxel_size": int(r.voxel_size),
                "provenance": list(r.provenance),
            }
            for i, r in enumerate(self.regions)
        ]


@dataclass
class MetaCluster:
    id: int
    member_region_ids: list
    footprint: np.ndarray              # sorted int64 super-voxel ids
    footprint_voxel_size: int
    overlap_counts: np.ndarray         # aligned with footprint

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "members": list(self.member_region_ids),
            "footprint_voxel_size": int(self.footprint_voxel_size),
            "overlap": [[int(s), int(c)] for s, c in
                        zip(self.footprint, self.overlap_counts)],
        }


def catalog_regions(clusterings, labeling) -> RegionCatalog:
    """Collect every region of every partition exactly once.

    Regions are keyed by their sorted super-voxel id sequence; ordering is by
    voxel size descending, then lexicographic id sequence.
    """
    if not clusterings:
        raise ValueError("no clusterings to catalog")
    voxel_counts = labeling.voxel_counts
    seen: dict[tuple, Region] = {}
    for interval_idx, iv in enumerate(clusterings):
        part = np.asarray(iv.partition)
        order = np.argsort(part, kind="stable")
        bounds = np.searchsorted(part[order], np.arange(iv.region_count + 1))
        for r in range(iv.region_count):
            members = np.sort(order[bounds[r]:bounds[r + 1]]).astype(np.int64)
            key = tuple(members.tolist())
            region = seen.get(key)
            if region is None:
                region = Region(
                    supervoxels=members,
                    voxel_size=int(voxel_counts[members].sum()),
                )
                seen[key] = region
            region.provenance.append(interval_idx)
    regions = sorted(seen.values(),
                     key=lambda r: (-r.voxel_size, tuple(r.supervoxels.tolist())))
    return RegionCatalog(regions=regions, n_supervoxels=labeling.count)


def jaccard_distance(r1: Region, r2: Region, labeling) -> float:
    """1 - |intersection| / |union|, both measured in voxels."""
    shared = np.intersect1d(r1.supervoxels, r2.supervoxels, assume_unique=True)
    if len(shared) == 0:
        return 1.0
    inter = float(labeling.voxel_counts[shared].sum())
    union = float(r1.voxel_size + r2.voxel_size) - inter
    return 1.0 - inter / union


def overlap_graph(catalog: RegionCatalog, labeling):
    """All region pairs sharing at least one super-voxel, with Jaccard weights.

    Returns (pairs, weights): pairs is (m, 2) int64 with a < b, sorted by the
    deterministic total order (weight, a, b).
    """
    buckets: list[list[int]] = [[] for _ in range(catalog.n_supervoxels)]
    for idx, region in enumerate(catalog.regions):
        for sv in region.supervoxels.tolist():
            buckets[sv].append(idx)

    chunks = []
    pending = []
    pending_n = 0

    def flush():
        nonlocal pending, pending_n
        if pending:
            chunks.append(np.unique(np.concatenate(pending, axis=0), axis=0))
            pending = []
            pending_n = 0

    for bucket in buckets:
        if len(bucket) < 2:
            continue
        arr = np.array(bucket, dtype=np.int64)
        ii, jj = np.triu_indices(len(arr), k=1)
        pending.append(np.stack([arr[ii], arr[jj]], axis=1))
        pending_n += len(ii)
        if pending_n >= _PAIR_CHUNK:
            flush()
    flush()
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.float64)
    pairs = np.unique(np.concatenate(chunks, axis=0), axis=0)

    voxel_counts = labeling.voxel_counts
    weights = np.empty(len(pairs), dtype=np.float64)
    for i, (a, b) in enumerate(pairs):
        ra, rb = catalog.regions[a], catalog.regions[b]
        shared = np.intersect1d(ra.supervoxels, rb.supervoxels, assume_unique=True)
        inter = float(voxel_counts[shared].sum())
        union = float(ra.voxel_size + rb.voxel_size) - inter
        weights[i] = 1.0 - inter / union

    order = np.lexsort((pairs[:, 1], pairs[:, 0], weights))
    return pairs[order], weights[order]


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def minimum_spanning_forest(n: int, pairs: np.ndarray, weights: np.ndarray):
    """Kruskal over the pre-sorted edge list; returns indices of MSF edges."""
    uf = _UnionFind(n)
    keep = []
    for i in range(len(pairs)):
        if uf.union(int(pairs[i, 0]), int(pairs[i, 1])):
            keep.append(i)
    return np.array(keep, dtype=np.int64)


def reverse_delete_cluster(catalog: RegionCatalog, labeling,
                           t: float = DEFAULT_JACCARD_THRESHOLD) -> list:
    """Group overlapping regions into meta-clusters.

    The spanning forest of the overlap graph is computed and every forest
    edge with weight >= t is deleted; the surviving connected components are
    the meta-clusters.
    """
    if not 0 < t <= 1:
        raise ValueError("threshold t must be in (0, 1]")
    pairs, weights = overlap_graph(catalog, labeling)
    msf = minimum_spanning_forest(len(catalog), pairs, weights)
    kept = msf[weights[msf] < t]

    uf = _UnionFind(len(catalog))
    for i in kept:
        uf.union(int(pairs[i, 0]), int(pairs[i, 1]))
    groups: dict[int, list] = {}
    for r in range(len(catalog)):
        groups.setdefault(uf.find(r), []).append(r)

    members_sorted = sorted(
        groups.values(),
        key=lambda m: (-_footprint_size(catalog, m, labeling), min(m)),
    )
    out = []
    for mc_id, members in enumerate(members_sorted):
        footprint, counts = _footprint(catalog, members)
        out.append(
            MetaCluster(
                id=mc_id,
                member_region_ids=sorted(members),
                footprint=footprint,
                footprint_voxel_size=int(labeling.voxel_counts[footprint].sum()),
                overlap_counts=counts,
            )
        )
    return out


def _footprint(catalog, members):
    ids = np.concatenate([catalog.regions[m].supervoxels for m in members])
    footprint, counts = np.unique(ids, return_counts=True)
    return footprint, counts


def _footprint_size(catalog, members, labeling) -> int:
    footprint = np.unique(np.concatenate(
        [catalog.regions[m].supervoxels for m in members]
    ))
    return int(labeling.voxel_counts[footprint].sum())


class ReverseDeleteMetaClusters(BaseEstimator, ClusterMixin):
    """Estimator wrapper: fit(catalog) given a labeling at construction.

    ``labels_`` maps each catalog region to its meta-cluster id.
    """

    def __init__(self, threshold=DEFAULT_JACCARD_THRESHOLD, labeling=None):
        self.threshold = threshold
        self.labeling = labeling

    def fit(self, X, y=None):
        if self.labeling is None:
            raise ValueError("labeling must be provided to compute voxel sizes")
        self.metaclusters_ = reverse_delete_cluster(X, self.labeling, t=self.threshold)
        labels = np.empty(len(X), dtype=np.int64)
        for mc in self.metaclusters_:
            labels[mc.member_region_ids] = mc.id
        self.labels_ = labels
        return self
