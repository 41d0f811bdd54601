import numpy as np
import pytest

import voxtree as vt


@pytest.fixture(scope="session")
def phantom():
    """24^3 two-sphere phantom with mild noise; the workhorse volume."""
    spec = vt.SpherePhantomSpec(
        dims=(24, 24, 24),
        spheres=[((7.0, 7.0, 7.0), 4.5, 120.0), ((16.0, 16.0, 16.0), 5.0, 220.0)],
        background=40.0,
        noise_sigma=2.0,
        rng_seed=7,
    )
    vol, truth = vt.generate_spheres_phantom(spec)
    return spec, vol, truth


@pytest.fixture(scope="session")
def pipeline(phantom):
    """Full pipeline output over the phantom at super-voxel target 64."""
    _, vol, truth = phantom
    labeling = vt.compute_supervoxels(vol, vt.SlicParams(target_size=64))
    graph = vt.build_adjacency_graph(vol, labeling)
    intervals = vt.exhaustive_cluster(graph, vt.SweepConfig(workers=1))
    catalog = vt.catalog_regions(intervals, labeling)
    metaclusters = vt.reverse_delete_cluster(catalog, labeling, t=0.3)
    tree = vt.build_tree(metaclusters, labeling)
    return {
        "vol": vol,
        "truth": truth,
        "labeling": labeling,
        "graph": graph,
        "intervals": intervals,
        "catalog": catalog,
        "metaclusters": metaclusters,
        "tree": tree,
    }


@pytest.fixture(scope="session")
def bundle_env(tmp_path_factory, phantom):
    """Precomputed on-disk bundle over the phantom, plus its workspace."""
    from voxtree.bundle import PipelineParams, precompute_bundle

    _, vol, _ = phantom
    root = tmp_path_factory.mktemp("bundles")
    vt.save_raw_volume(vol, root / "ph.raw", root / "ph.json")
    params = PipelineParams(supervoxel_size=64, workers=2)
    bundle = precompute_bundle(root / "ph.raw", root / "main", params)
    return {"root": root, "bundle": bundle, "params": params}


@pytest.fixture
def chain_graph():
    """A--B (w=2), B--C (w=5), unit node sizes."""
    return vt.graph_from_edge_list([1.0, 1.0, 1.0], [(0, 1, 2.0), (1, 2, 5.0)])


def make_random_graph(rng, n_nodes=40, extra_edges=60, max_size=50):
    """Random connected graph with uniform weights and integer node sizes."""
    edges = []
    for i in range(1, n_nodes):
        j = int(rng.integers(0, i))
        edges.append((j, i, float(rng.uniform(0, 1))))
    seen = {(min(a, b), max(a, b)) for a, b, _ in edges}
    while len(edges) < n_nodes - 1 + extra_edges:
        a, b = (int(v) for v in rng.integers(0, n_nodes, 2))
        key = (min(a, b), max(a, b))
        if a == b or key in seen:
            continue
        seen.add(key)
        edges.append((key[0], key[1], float(rng.uniform(0, 1))))
    sizes = rng.integers(1, max_size, n_nodes).astype(float)
    return vt.graph_from_edge_list(sizes, edges)
