"""Independent oracles and small builders shared by the test modules.

Everything here recomputes results by brute force, separately from the
library code paths it is used to check.
"""

import numpy as np

import voxtree as vt
from voxtree.metacluster import Region, RegionCatalog
from voxtree.supervoxels import SuperVoxelLabeling


def dense_gaussian_oracle(arr3, sigma):
    """Direct dense 3D convolution with a clamped-edge Gaussian kernel."""
    import math

    radius = math.ceil(3.0 * sigma)
    offs = np.arange(-radius, radius + 1)
    k1 = np.exp(-0.5 * (offs / sigma) ** 2)
    k1 /= k1.sum()
    nz, ny, nx = arr3.shape
    out = np.zeros_like(arr3, dtype=np.float64)
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                acc = 0.0
                for dz, wz in zip(offs, k1):
                    zz = min(max(z + dz, 0), nz - 1)
                    for dy, wy in zip(offs, k1):
                        yy = min(max(y + dy, 0), ny - 1)
                        for dx, wx in zip(offs, k1):
                            xx = min(max(x + dx, 0), nx - 1)
                            acc += wz * wy * wx * arr3[zz, yy, xx]
                out[z, y, x] = acc
    return out


def flood_fill_components(labels3, label):
    """Number of 6-connected components of a given label, by BFS."""
    from collections import deque

    mask = labels3 == label
    seen = np.zeros_like(mask)
    comps = 0
    nz, ny, nx = mask.shape
    for start in zip(*np.nonzero(mask & ~seen)):
        if seen[start]:
            continue
        comps += 1
        q = deque([start])
        seen[start] = True
        while q:
            z, y, x = q.popleft()
            for dz, dy, dx in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
                               (0, 0, 1), (0, 0, -1)):
                p = (z + dz, y + dy, x + dx)
                if 0 <= p[0] < nz and 0 <= p[1] < ny and 0 <= p[2] < nx \
                        and mask[p] and not seen[p]:
                    seen[p] = True
                    q.append(p)
    return comps


def brute_force_face_pairs(labels3):
    """All label pairs sharing a voxel face, found by scanning every voxel."""
    pairs = set()
    nz, ny, nx = labels3.shape
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                a = labels3[z, y, x]
                if x + 1 < nx and labels3[z, y, x + 1] != a:
                    pairs.add(tuple(sorted((int(a), int(labels3[z, y, x + 1])))))
                if y + 1 < ny and labels3[z, y + 1, x] != a:
                    pairs.add(tuple(sorted((int(a), int(labels3[z, y + 1, x])))))
                if z + 1 < nz and labels3[z + 1, y, x] != a:
                    pairs.add(tuple(sorted((int(a), int(labels3[z + 1, y, x])))))
    return pairs


def line_labeling(voxel_counts):
    """A real labeling over a (sum, 1, 1) volume: super-voxel i owns
    voxel_counts[i] consecutive voxels."""
    voxel_counts = np.asarray(voxel_counts, dtype=np.int64)
    labels = np.repeat(np.arange(len(voxel_counts)), voxel_counts).astype(np.uint32)
    n = int(voxel_counts.sum())
    idx = np.arange(n, dtype=np.float64)
    centroids = np.stack([
        np.bincount(labels, weights=idx) / voxel_counts, np.zeros(len(voxel_counts)),
        np.zeros(len(voxel_counts))], axis=1)
    starts = np.concatenate([[0], np.cumsum(voxel_counts)[:-1]])
    ends = np.cumsum(voxel_counts) - 1
    bboxes = np.stack([starts, np.zeros_like(starts), np.zeros_like(starts),
                       ends, np.zeros_like(ends), np.zeros_like(ends)], axis=1)
    return SuperVoxelLabeling(
        labels=labels, count=len(voxel_counts), dims=(n, 1, 1),
        voxel_counts=voxel_counts, centroids=centroids,
        mean_intensity=np.zeros(len(voxel_counts)), bboxes=bboxes,
    )


def make_catalog(region_sv_lists, voxel_counts):
    """RegionCatalog over explicit super-voxel id lists."""
    voxel_counts = np.asarray(voxel_counts, dtype=np.int64)
    regions = []
    for svs in region_sv_lists:
        svs = np.array(sorted(svs), dtype=np.int64)
        regions.append(Region(supervoxels=svs,
                              voxel_size=int(voxel_counts[svs].sum())))
    regions.sort(key=lambda r: (-r.voxel_size, tuple(r.supervoxels.tolist())))
    return RegionCatalog(regions=regions, n_supervoxels=len(voxel_counts))


def random_catalog(rng, n_sv=12, n_regions=20, max_region=6):
    """Random region catalog plus its line labeling."""
    voxel_counts = rng.integers(1, 30, n_sv)
    labeling = line_labeling(voxel_counts)
    seen = set()
    lists = []
    cap = min(max_region, n_sv)
    while len(lists) < n_regions:
        size = int(rng.integers(1, cap + 1))
        svs = tuple(sorted(rng.choice(n_sv, size=size, replace=False).tolist()))
        if svs in seen:
            continue
        seen.add(svs)
        lists.append(svs)
    return make_catalog(lists, voxel_counts), labeling


def threshold_components_oracle(catalog, labeling, t):
    """Connected components of the overlap graph keeping only edges < t,
    computed directly from pairwise Jaccard distances (no MSF)."""
    n = len(catalog)
    adj = [[] for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            ra, rb = catalog.regions[a], catalog.regions[b]
            if len(np.intersect1d(ra.supervoxels, rb.supervoxels)) == 0:
                continue
            if vt.jaccard_distance(ra, rb, labeling) < t:
                adj[a].append(b)
                adj[b].append(a)
    comp = [-1] * n
    c = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = c
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if comp[v] < 0:
                    comp[v] = c
                    stack.append(v)
        c += 1
    groups = {}
    for r, cc in enumerate(comp):
        groups.setdefault(cc, set()).add(r)
    return {frozenset(g) for g in groups.values()}


def region_connected_in_graph(graph, nodes):
    """Whether a node set is connected using only edges inside the set."""
    nodes = set(int(v) for v in nodes)
    if len(nodes) <= 1:
        return True
    adj = {v: [] for v in nodes}
    for a, b, _ in graph.edges():
        if a in nodes and b in nodes:
            adj[a].append(b)
            adj[b].append(a)
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == nodes


def brute_force_search(tree, sv_ids, min_size, max_size):
    """Full scan over all meta-clusters, no tree traversal."""
    out = []
    for mc in tree.metaclusters:
        if not (min_size <= mc.footprint_voxel_size <= max_size):
            continue
        if set(int(s) for s in sv_ids) <= set(int(s) for s in mc.footprint):
            out.append(mc.id)
    out.sort(key=lambda m: (tree.metaclusters[m].footprint_voxel_size, m))
    return out


def run_compress(values):
    out = []
    for v in values:
        if not out or out[-1] != v:
            out.append(v)
    return tuple(out)
