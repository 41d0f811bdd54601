"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The persistence enumeration
and the exhaustiveness oracle dominate the runtime (a few minutes total on a
small machine).
"""

import json
import math
import multiprocessing
import time
from contextlib import contextmanager

import numpy as np
import pytest

import voxtree as vt
from voxtree.exhaustive import distinct_partitions

from conftest import make_random_graph
from helpers import brute_force_search, random_catalog, run_compress, \
    threshold_components_oracle
from persistence_oracle import check_curves_chunk, oracle_fixpoints


@contextmanager
def criterion(name):
    start = time.monotonic()
    try:
        yield
    except Exception:
        print(f"\n[ACCEPTANCE] {name}: FAIL ({time.monotonic() - start:.1f}s)")
        raise
    print(f"\n[ACCEPTANCE] {name}: PASS ({time.monotonic() - start:.1f}s)")


def _intervals_json(intervals):
    return json.dumps([
        {"k_start": iv.k_start,
         "k_end": None if math.isinf(iv.k_end) else iv.k_end,
         "region_count": iv.region_count,
         "partition": iv.partition.tolist()}
        for iv in intervals
    ], sort_keys=True)


def test_exhaustiveness_oracle(pipeline):
    """Partition set from interval tracking == plain runs at 1,000 sampled k
    plus all interval endpoints; single worker under 60 s."""
    with criterion("exhaustiveness-oracle"):
        graph = pipeline["graph"]
        start = time.monotonic()
        intervals = vt.exhaustive_cluster(graph, vt.SweepConfig(workers=1))
        k_stop = next(iv.k_start for iv in intervals if iv.region_count <= 2)
        ks = list(np.linspace(0.0, k_stop, 1000))
        ks += [iv.k_start for iv in intervals]
        ks += [iv.k_end for iv in intervals if math.isfinite(iv.k_end)]
        sampled = {tuple(vt.fh_run(graph, float(k)).tolist()) for k in ks}
        elapsed = time.monotonic() - start
        assert distinct_partitions(intervals) == sampled
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_interval_validity(pipeline):
    """20 random intervals: stored partition reproduced at k_start, midpoint
    and just below k_end; the partition changes exactly at k_end."""
    with criterion("interval-validity"):
        graph, intervals = pipeline["graph"], pipeline["intervals"]
        finite = [iv for iv in intervals if math.isfinite(iv.k_end)]
        rng = np.random.default_rng(101)
        picks = rng.choice(len(finite), size=min(20, len(finite)), replace=False)
        for idx in picks:
            iv = finite[idx]
            for k in (iv.k_start, (iv.k_start + iv.k_end) / 2,
                      iv.k_end * (1 - 1e-9)):
                assert np.array_equal(vt.fh_run(graph, float(k)), iv.partition)
            assert not np.array_equal(vt.fh_run(graph, iv.k_end), iv.partition)


def test_tiling_and_termination(pipeline):
    """Sorted intervals tile [0, K_stop) exactly; the sweep ends in the
    single-region interval per the two-or-fewer stop rule."""
    with criterion("tiling-and-termination"):
        intervals = pipeline["intervals"]
        assert intervals[0].k_start == 0.0
        for prev, nxt in zip(intervals, intervals[1:]):
            assert prev.k_end == nxt.k_start, "gap or overlap"
        assert intervals[-1].region_count == 1
        assert intervals[-1].k_end == math.inf
        small = [i for i, iv in enumerate(intervals) if iv.region_count <= 2]
        assert small, "no interval with two regions or fewer"
        # nothing beyond the first <=2 interval except the terminal chain
        assert all(iv.region_count <= 2 for iv in intervals[small[0]:])


def test_determinism_under_parallelism(pipeline):
    """workers=1 and workers=12 give byte-identical serialized intervals,
    catalogs and trees."""
    with criterion("determinism-under-parallelism"):
        vol, labeling = pipeline["vol"], pipeline["labeling"]
        graph = pipeline["graph"]
        docs = {}
        for workers in (1, 12):
            ivs = vt.exhaustive_cluster(graph, vt.SweepConfig(workers=workers))
            catalog = vt.catalog_regions(ivs, labeling)
            mcs = vt.reverse_delete_cluster(catalog, labeling, t=0.3)
            tree = vt.build_tree(mcs, labeling)
            docs[workers] = (
                _intervals_json(ivs),
                json.dumps(catalog.to_records(), sort_keys=True),
                json.dumps([m.to_record() for m in mcs], sort_keys=True),
                json.dumps(tree.to_records(), sort_keys=True),
            )
        assert docs[1] == docs[12]


def test_threshold_rule_min_same_partition_set():
    """The as-printed flip rule produces the same unique partitions as the
    corrected max rule on 10 random graphs."""
    with criterion("threshold-rule-min-equivalence"):
        rng = np.random.default_rng(102)
        for _ in range(10):
            g = make_random_graph(rng, n_nodes=int(rng.integers(15, 45)),
                                  extra_edges=int(rng.integers(10, 60)))
            p_max = distinct_partitions(
                vt.exhaustive_cluster(g, vt.SweepConfig(workers=1,
                                                        threshold_rule="max")))
            p_min = distinct_partitions(
                vt.exhaustive_cluster(g, vt.SweepConfig(workers=1,
                                                        threshold_rule="min")))
            assert p_max == p_min


def test_feature_recovery(phantom, pipeline):
    """Some tree node recovers each noisy ground-truth sphere with voxel
    Jaccard >= 0.9, within 2 minutes."""
    with criterion("feature-recovery"):
        start = time.monotonic()
        _, vol, truth = phantom
        labeling, tree = pipeline["labeling"], pipeline["tree"]
        labels_flat = labeling.labels
        for sphere_label in (1, 2):
            target = truth == sphere_label
            best = 0.0
            for mc in tree.metaclusters:
                fp = np.isin(labels_flat, mc.footprint)
                inter = np.logical_and(fp, target).sum()
                union = np.logical_or(fp, target).sum()
                best = max(best, inter / union)
            assert best >= 0.9, f"sphere {sphere_label}: best Jaccard {best:.3f}"
        assert time.monotonic() - start < 120.0


def test_reverse_delete_equivalence():
    """Meta-clusters from forest deletion equal the components of the
    thresholded overlap graph on 50 random catalogs."""
    with criterion("reverse-delete-equivalence"):
        rng = np.random.default_rng(103)
        for _ in range(50):
            cat, labeling = random_catalog(rng, n_sv=int(rng.integers(5, 14)),
                                           n_regions=int(rng.integers(4, 25)))
            t = float(rng.uniform(0.1, 0.95))
            got = {frozenset(mc.member_region_ids)
                   for mc in vt.reverse_delete_cluster(cat, labeling, t=t)}
            assert got == threshold_components_oracle(cat, labeling, t)


def _subtree_mc_sets(tree):
    """Per-instance set of meta-cluster ids below it (instance excluded)."""
    order = []
    stack = [0]
    while stack:
        inst = stack.pop()
        order.append(inst)
        stack.extend(tree.nodes[inst].children)
    sets = {inst: set() for inst in order}
    for inst in reversed(order):
        node = tree.nodes[inst]
        for c in node.children:
            sets[inst].add(tree.nodes[c].metacluster_id)
            sets[inst] |= sets[c]
    return sets


def _check_tree_invariants(tree):
    masks = tree._masks
    # containment on every edge
    for node in tree.nodes[1:]:
        parent = tree.nodes[node.parent_instance]
        if parent.metacluster_id is not None:
            child_fp = masks[node.metacluster_id]
            parent_fp = masks[parent.metacluster_id]
            assert not np.any(child_fp & ~parent_fp)
    # sibling sizes descending
    for node in tree.nodes:
        sizes = [tree.nodes[c].footprint_voxel_size for c in node.children]
        assert sizes == sorted(sizes, reverse=True)
    # ancestor-superset guarantee on all strict containment pairs
    sub = _subtree_mc_sets(tree)
    pops = masks.sum(axis=1)
    inter = masks.astype(np.float32) @ masks.astype(np.float32).T
    for a in range(len(tree.metaclusters)):
        for b in range(len(tree.metaclusters)):
            if a == b or inter[a, b] != pops[a] or pops[a] == pops[b]:
                continue     # keep strict subsets only
            for b_inst in tree.mc_instances[b]:
                assert a in sub[b_inst], f"mc {a} missing under instance {b_inst}"


def test_tree_invariants(pipeline, phantom):
    """Containment, sibling order and ancestor-superset guarantee, on the
    phantom tree and on a richer phantom tree with thousands of nodes."""
    with criterion("tree-invariants"):
        _check_tree_invariants(pipeline["tree"])

        spec = vt.SpherePhantomSpec(
            dims=(28, 28, 28),
            spheres=[((8.0, 8.0, 8.0), 5.0, 120.0),
                     ((19.0, 19.0, 19.0), 5.5, 220.0),
                     ((8.0, 19.0, 14.0), 4.0, 80.0),
                     ((19.0, 8.0, 14.0), 3.5, 170.0)],
            background=40.0, noise_sigma=4.0, rng_seed=13)
        vol, _ = vt.generate_spheres_phantom(spec)
        labeling = vt.compute_supervoxels(vol, vt.SlicParams(target_size=27))
        graph = vt.build_adjacency_graph(vol, labeling)
        intervals = vt.exhaustive_cluster(graph, vt.SweepConfig(workers=2))
        catalog = vt.catalog_regions(intervals, labeling)
        mcs = vt.reverse_delete_cluster(catalog, labeling, t=0.3)
        tree = vt.build_tree(mcs, labeling)
        assert len(tree.nodes) <= 5001
        print(f"\n  rich phantom tree: {len(tree.nodes)} nodes, "
              f"{tree.build_report['duplicates']} duplicates")
        _check_tree_invariants(tree)


def test_search_oracle_and_constants(pipeline, bundle_env):
    """search_nodes and containing_node match full-tree scans for 100 random
    queries; the documented default constants sit in the manifest."""
    with criterion("search-oracle-and-constants"):
        tree, labeling = pipeline["tree"], pipeline["labeling"]
        rng = np.random.default_rng(104)
        nx, ny, nz = labeling.dims
        for _ in range(100):
            n_pts = int(rng.integers(1, 6))
            pts = [[int(rng.integers(0, nx)), int(rng.integers(0, ny)),
                    int(rng.integers(0, nz))] for _ in range(n_pts)]
            lo = int(rng.integers(0, 2000))
            hi = lo + int(rng.integers(1, 24 ** 3))
            q = vt.SearchQuery(brushed_voxels=pts, min_size=lo, max_size=hi)
            got = [m for m, _ in vt.search_nodes(tree, q, labeling)]
            svs = np.unique(labeling.labels[[p[0] + nx * (p[1] + ny * p[2])
                                             for p in pts]])
            assert got == brute_force_search(tree, svs, lo, hi)
            node = vt.containing_node(tree, pts, labeling)
            full = brute_force_search(tree, svs, 0, math.inf)
            if full:
                assert node.metacluster_id == full[0]
            else:
                assert node.metacluster_id is None
        params = bundle_env["bundle"].manifest["parameters"]
        assert params["jaccard_threshold"] == 0.3
        assert params["bins"] == 64
        assert params["initial_range"] == 50.0
        assert params["growth_factor"] == 1.5


def test_numerical_micro_checks():
    """Chi-squared symmetry/range on 1e4 histogram pairs; Jaccard metric
    properties on 1e4 region triples; persistence simplification against the
    exhaustive-pairing oracle on every curve of <= 10 samples over {0..4}."""
    with criterion("numerical-micro-checks"):
        rng = np.random.default_rng(105)

        # chi-squared: symmetry and [0, 1] range
        for _ in range(10_000):
            h1 = rng.dirichlet(np.full(64, 0.2))
            h2 = rng.dirichlet(np.full(64, 0.2))
            d = vt.chi_squared_distance(h1, h2)
            assert d == vt.chi_squared_distance(h2, h1)
            assert 0.0 <= d <= 1.0

        # Jaccard: symmetry, range, triangle inequality
        from helpers import line_labeling, make_catalog

        voxel_counts = rng.integers(1, 40, 16)
        labeling = line_labeling(voxel_counts)
        for _ in range(10_000):
            lists = []
            while len(lists) < 3:
                size = int(rng.integers(1, 9))
                lists.append(tuple(sorted(
                    rng.choice(16, size=size, replace=False).tolist())))
            cat = make_catalog(lists, voxel_counts)
            a, b, c = cat.regions
            dab = vt.jaccard_distance(a, b, labeling)
            dac = vt.jaccard_distance(a, c, labeling)
            dbc = vt.jaccard_distance(b, c, labeling)
            assert dab == vt.jaccard_distance(b, a, labeling)
            assert 0.0 <= dab <= 1.0
            assert dab <= dac + dbc + 1e-12

        # persistence simplification against the exhaustive-pairing oracle:
        # run-compressed curves are the semantic core (plateau runs cancel as
        # units); every curve of <= 10 samples maps onto one of them
        chunks = [((a, b), 10, 5, 5.0)
                  for a in range(5) for b in range(5) if a != b]
        with multiprocessing.Pool(2) as pool:
            results = pool.map(check_curves_chunk, chunks)
        total = sum(r[0] for r in results)
        mismatches = [m for r in results for m in r[1]]
        assert not mismatches, mismatches[:3]
        assert total == 5 * (4 ** 10 - 1) // 3 - 5   # all compressed, len 2..10

        # single-sample curves and plateau handling
        memo = {}
        for v in range(5):
            out = vt.persistence_simplify(
                vt.Polyline1D(np.array([0.0]), np.array([float(v)])), 5.0)
            assert out.ys.tolist() == [float(v)]
        for _ in range(10_000):
            raw = tuple(int(x) for x in rng.integers(0, 5,
                                                     size=rng.integers(1, 11)))
            poly = vt.Polyline1D(np.arange(len(raw), dtype=float),
                                 np.array(raw, dtype=float))
            got = run_compress(vt.persistence_simplify(poly, 5.0).ys.tolist())
            assert got in oracle_fixpoints(run_compress(raw), 5.0, memo)
