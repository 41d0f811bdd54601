"""Containment hierarchy over meta-clusters, filtering, and brush search.

Nodes are *instances*: the same meta-cluster can appear in several places so
that every superset has it somewhere in its subtree. The primary parent of a
meta-cluster is its smallest superset; duplicates are inserted under further
superset instances in increasing size order, which keeps their number minimal.
Super-voxels act as virtual leaves through an inverted index instead of being
materialized as nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .validation import check_voxels_in_bounds


@dataclass
class TreeNode:
    instance_id: int
    metacluster_id: int | None         # None for the synthetic root
    parent_instance: int | None
    children: list = field(default_factory=list)
    footprint_voxel_size: int = 0
    is_duplicate: bool = False
    canonical_instance: int = 0


@dataclass
class FilterSpec:
    min_voxel_size: int = 0
    max_branching: int | None = None   # None = unlimited

    def __post_init__(self):
        if self.min_voxel_size < 0:
            raise ValueError("min_voxel_size must be >= 0")
        if self.max_branching is not None and self.max_branching < 1:
            raise ValueError("max_branching must be >= 1 or None")


@dataclass
class SearchQuery:
    brushed_voxels: list               # (x, y, z) coordinates
    min_size: int = 0
    max_size: float = math.inf

    def __post_init__(self):
        if not len(self.brushed_voxels):
            raise ValueError("brushed_voxels must be non-empty")
        if self.min_size > self.max_size:
            raise ValueError("min_size must be <= max_size")


class MetaClusterTree:
    """Immutable after build; all queries are read-only."""

    def __init__(self, metaclusters, nodes, mc_instances, sv_index,
                 footprint_masks, n_supervoxels, total_voxels, build_report):
        self.metaclusters = metaclusters
        self.nodes: list[TreeNode] = nodes
        self.mc_instances: list[list[int]] = mc_instances
        self.sv_index: list[list[int]] = sv_index
        self._masks = footprint_masks          # (M, n_sv) bool
        self.n_supervoxels = n_supervoxels
        self.total_voxels = total_voxels
        self.build_report = build_report

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def node_size(self, instance_id: int) -> int:
        return self.nodes[instance_id].footprint_voxel_size

    def canonical_instance(self, mc_id: int) -> int:
        return self.mc_instances[mc_id][0]

    def footprint_contains_all(self, mc_id: int, sv_ids: np.ndarray) -> bool:
        return bool(self._masks[mc_id, sv_ids].all())

    def ancestors(self, instance_id: int):
        node = self.nodes[instance_id]
        while node.parent_instance is not None:
            node = self.nodes[node.parent_instance]
            yield node

    def to_records(self) -> list:
        return [
            {
                "instance_id": n.instance_id,
                "metacluster_id": n.metacluster_id,
                "parent_instance": n.parent_instance,
                "children": list(n.children),
                "footprint_voxel_size": int(n.footprint_voxel_size),
                "is_duplicate": n.is_duplicate,
                "canonical_instance": n.canonical_instance,
            }
            for n in self.nodes
        ]


def build_tree(metaclusters, labeling) -> MetaClusterTree:
    """Construct the containment tree over the given meta-clusters."""
    n_sv = labeling.count
    total_voxels = int(labeling.voxel_counts.sum())
    M = len(metaclusters)

    masks = np.zeros((M, n_sv), dtype=bool)
    for i, mc in enumerate(metaclusters):
        masks[i, mc.footprint] = True
    pops = masks.sum(axis=1)
    sizes = np.array([mc.footprint_voxel_size for mc in metaclusters], dtype=np.int64)

    # containment: contains[a, b] True iff footprint(a) is a subset of footprint(b)
    if M:
        inter = masks.astype(np.float32) @ masks.astype(np.float32).T
        contains = inter == pops[:, None]
    else:
        contains = np.zeros((0, 0), dtype=bool)

    identical_pairs = []
    supersets: list[list[int]] = []
    for v in range(M):
        lst = []
        for s in range(M):
            if s == v or not contains[v, s]:
                continue
            if contains[s, v]:                 # identical footprints
                if s < v:
                    lst.append(s)              # smaller id acts as the container
                if v < s:
                    identical_pairs.append((v, s))
            else:
                lst.append(s)
        lst.sort(key=lambda s: (sizes[s], s))
        supersets.append(lst)

    nodes = [TreeNode(instance_id=0, metacluster_id=None, parent_instance=None,
                      footprint_voxel_size=total_voxels)]
    ancestors: list[set] = [set()]
    mc_instances: list[list[int]] = [[] for _ in range(M)]

    def add_instance(mc_id: int, parent: int) -> int:
        inst = len(nodes)
        first = not mc_instances[mc_id]
        nodes.append(TreeNode(
            instance_id=inst,
            metacluster_id=mc_id,
            parent_instance=parent,
            footprint_voxel_size=int(sizes[mc_id]),
            is_duplicate=not first,
            canonical_instance=inst if first else mc_instances[mc_id][0],
        ))
        nodes[parent].children.append(inst)
        ancestors.append(ancestors[parent] | {parent})
        mc_instances[mc_id].append(inst)
        return inst

    # process largest first so all superset instances exist before their subsets
    for v in sorted(range(M), key=lambda i: (-sizes[i], i)):
        if not supersets[v]:
            add_instance(v, 0)
            continue
        covered: set = set()
        for s in supersets[v]:
            for s_inst in mc_instances[s]:
                if s_inst in covered:
                    continue
                inst = add_instance(v, s_inst)
                covered |= ancestors[inst]    # includes s_inst itself

    for node in nodes:
        node.children.sort(key=lambda c: (
            -nodes[c].footprint_voxel_size, nodes[c].metacluster_id, c
        ))

    # inverted index: sv -> instances where the sv is a virtual leaf
    sv_index: list[list[int]] = [[] for _ in range(n_sv)]
    for node in nodes:
        if node.metacluster_id is None:
            own = np.ones(n_sv, dtype=bool)
        else:
            own = masks[node.metacluster_id].copy()
        for c in node.children:
            own &= ~masks[nodes[c].metacluster_id]
        for sv in np.nonzero(own)[0].tolist():
            sv_index[sv].append(node.instance_id)

    report = {
        "metaclusters": M,
        "instances": len(nodes) - 1,
        "duplicates": sum(1 for n in nodes if n.is_duplicate),
        "identical_footprint_pairs": identical_pairs,
    }
    return MetaClusterTree(metaclusters, nodes, mc_instances, sv_index,
                           masks, n_sv, total_voxels, report)


class TreeView:
    """Non-destructive filtered view; the underlying tree is untouched."""

    def __init__(self, tree: MetaClusterTree, spec: FilterSpec, base=None):
        self.tree = tree
        self.spec = spec
        self._base = base
        self._visible: set[int] = set()
        self._children: dict[int, list] = {}
        self._walk(0)

    def _raw_children(self, inst: int) -> list:
        if self._base is not None:
            return self._base.visible_children(inst)
        return self.tree.nodes[inst].children

    def _walk(self, start: int):
        stack = [start]
        while stack:
            inst = stack.pop()
            self._visible.add(inst)
            kept = [c for c in self._raw_children(inst)
                    if self.tree.node_size(c) >= self.spec.min_voxel_size]
            if self.spec.max_branching is not None:
                kept = kept[: self.spec.max_branching]
            self._children[inst] = kept
            stack.extend(kept)

    def is_visible(self, inst: int) -> bool:
        return inst in self._visible

    def visible_children(self, inst: int) -> list:
        return self._children.get(inst, [])

    def visible_instances(self) -> list:
        return sorted(self._visible)

    def filter(self, spec: FilterSpec) -> "TreeView":
        return TreeView(self.tree, spec, base=self)

    def to_records(self) -> list:
        out = []
        for inst in self.visible_instances():
            node = self.tree.nodes[inst]
            out.append({
                "instance_id": node.instance_id,
                "metacluster_id": node.metacluster_id,
                "parent_instance": node.parent_instance,
                "children": self.visible_children(inst),
                "footprint_voxel_size": int(node.footprint_voxel_size),
                "is_duplicate": node.is_duplicate,
                "canonical_instance": node.canonical_instance,
            })
        return out


def filter_tree(tree: MetaClusterTree, spec: FilterSpec) -> TreeView:
    """Hide nodes below the size threshold and cap each sibling list."""
    return TreeView(tree, spec)


def _brushed_supervoxels(tree, labeling, brushed_voxels) -> np.ndarray:
    pts = check_voxels_in_bounds(brushed_voxels, labeling.dims)
    nx, ny, _ = labeling.dims
    flat = pts[:, 0] + nx * (pts[:, 1] + ny * pts[:, 2])
    return np.unique(labeling.labels[flat]).astype(np.int64)


def _ascend(tree: MetaClusterTree, sv_ids: np.ndarray, max_size: float):
    """Instances reachable bottom-up from the brushed super-voxels.

    Paths are pruned once a node exceeds max_size; sizes only grow upward, so
    nothing within the bound is missed. Yields qualifying meta-cluster ids.
    """
    start = list(tree.sv_index[int(sv_ids[0])])
    seen: set[int] = set()
    found: set[int] = set()
    stack = start
    while stack:
        inst = stack.pop()
        if inst in seen:
            continue
        seen.add(inst)
        node = tree.nodes[inst]
        if node.footprint_voxel_size > max_size:
            continue
        if node.metacluster_id is not None and \
                tree.footprint_contains_all(node.metacluster_id, sv_ids):
            found.add(node.metacluster_id)
        if node.parent_instance is not None:
            stack.append(node.parent_instance)
    return found


def search_nodes(tree: MetaClusterTree, q: SearchQuery, labeling) -> list:
    """Meta-clusters whose footprint contains every brushed voxel's super-voxel
    and whose voxel size lies within the query bounds.

    Returns (metacluster_id, canonical_instance) pairs sorted by size
    ascending.
    """
    sv_ids = _brushed_supervoxels(tree, labeling, q.brushed_voxels)
    found = _ascend(tree, sv_ids, q.max_size)
    result = [
        mc_id for mc_id in found
        if tree.metaclusters[mc_id].footprint_voxel_size >= q.min_size
    ]
    result.sort(key=lambda m: (tree.metaclusters[m].footprint_voxel_size, m))
    return [(m, tree.canonical_instance(m)) for m in result]


def containing_node(tree: MetaClusterTree, brushed_voxels, labeling) -> TreeNode:
    """Instance of the smallest meta-cluster containing all brushed voxels;
    the root if none does."""
    sv_ids = _brushed_supervoxels(tree, labeling, brushed_voxels)
    found = _ascend(tree, sv_ids, math.inf)
    if not found:
        return tree.root
    best = min(found, key=lambda m: (tree.metaclusters[m].footprint_voxel_size, m))
    return tree.nodes[tree.canonical_instance(best)]
