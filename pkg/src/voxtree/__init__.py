"""Exhaustive super-voxel clustering and hierarchical volume exploration."""

from .exhaustive import (ExhaustiveGraphClustering, IntervalClustering,
                         RegionState, SweepConfig, edge_flip_threshold,
                         exhaustive_cluster, fh_run, fh_run_tracked,
                         merge_predicate)
from .metacluster import (MetaCluster, RegionCatalog, ReverseDeleteMetaClusters,
                          catalog_regions, jaccard_distance,
                          reverse_delete_cluster)
from .mctree import (FilterSpec, MetaClusterTree, SearchQuery, build_tree,
                     containing_node, filter_tree, search_nodes)
from .supervoxels import (SlicParams, SlicSupervoxels, SuperVoxelLabeling,
                          compute_supervoxels, enforce_connectivity)
from .svgraph import (AdjacencyGraph, build_adjacency_graph,
                      chi_squared_distance, graph_from_edge_list)
from .viz import (Bookmark, Polyline1D, TransferFunction1D,
                  auto_transfer_function, persistence_simplify,
                  render_composite_slice, render_overlap_preview)
from .volume import (ScalarVolume, SpherePhantomSpec, VolumeMeta,
                     gaussian_smooth, generate_spheres_phantom,
                     load_raw_volume, save_raw_volume, slice_extract)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyGraph", "Bookmark", "ExhaustiveGraphClustering", "FilterSpec",
    "IntervalClustering", "MetaCluster", "MetaClusterTree", "Polyline1D",
    "RegionCatalog", "RegionState", "ReverseDeleteMetaClusters", "ScalarVolume",
    "SearchQuery", "SlicParams", "SlicSupervoxels", "SpherePhantomSpec",
    "SuperVoxelLabeling", "SweepConfig", "TransferFunction1D", "VolumeMeta",
    "auto_transfer_function", "build_adjacency_graph", "build_tree",
    "catalog_regions", "chi_squared_distance", "containing_node",
    "compute_supervoxels", "edge_flip_threshold", "enforce_connectivity",
    "exhaustive_cluster", "fh_run", "fh_run_tracked", "filter_tree",
    "gaussian_smooth", "generate_spheres_phantom", "graph_from_edge_list",
    "jaccard_distance", "load_raw_volume", "merge_predicate",
    "persistence_simplify", "render_composite_slice", "render_overlap_preview",
    "reverse_delete_cluster", "save_raw_volume", "search_nodes", "slice_extract",
]
