"""Offline precompute pipeline and the on-disk artifact bundle.

A bundle directory holds everything the exploration service needs:

    manifest.json             parameters, format version, input digests
    timings.json              wall time per stage (informational only;
                              excluded from the bit-identical rerun contract)
    meta.json                 working volume metadata
    volume.f32                working volume, float32 little-endian, x-fastest
    labels.u32                per-voxel super-voxel ids
    svstats.json              per-super-voxel statistics and histograms
    edges.bin                 adjacency edges (u32 a, u32 b, f32 w), sorted
    clusterings/intervals.json, partitions.bin
    regions.json              deduplicated region catalog
    metaclusters.json
    tree.json
    previews/                 PNG cache (append-only)
    bookmarks.json

Rerunning the pipeline with the same manifest parameters over the same input
reproduces every file byte for byte, except timings.json.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import viz
from .exhaustive import IntervalClustering, SweepConfig, exhaustive_cluster
from .metacluster import (MetaCluster, Region, RegionCatalog, catalog_regions,
                          reverse_delete_cluster)
from .mctree import MetaClusterTree, TreeNode, build_tree
from .supervoxels import SlicParams, SuperVoxelLabeling, compute_supervoxels
from .svgraph import HISTOGRAM_BINS, build_adjacency_graph
from .volume import (ScalarVolume, VolumeMeta, gaussian_smooth, load_raw_volume,
                     load_sidecar)

FORMAT_VERSION = 1
INCOMPLETE_MARKER = "_INCOMPLETE"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
        self.stage = stage


class InvalidBundleError(RuntimeError):
    pass


@dataclass
class PipelineParams:
    supervoxel_size: int = 2197
    compactness: float = 0.1
    max_iterations: int = 10
    convergence_eps: float = 0.5
    bins: int = HISTOGRAM_BINS
    jaccard_threshold: float = 0.3
    initial_range: float = 50.0
    growth_factor: float = 1.5
    workers: int = 12
    smooth_sigma: float = 0.0
    size_units: str = "voxels"
    threshold_rule: str = "max"


def _dump_json(obj, path: Path) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, sort_keys=True, separators=(",", ":"))


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _intervals_records(intervals, node_count: int):
    records = []
    blob = bytearray()
    for iv in intervals:
        records.append({
            "k_start": iv.k_start,
            "k_end": None if math.isinf(iv.k_end) else iv.k_end,
            "region_count": iv.region_count,
            "partition_offset": len(blob),
        })
        blob.extend(iv.partition.astype("<u4").tobytes())
    return records, bytes(blob)


def precompute_bundle(volume_path, out_dir, params: PipelineParams | None = None,
                      sidecar_path=None) -> "ArtifactBundle":
    """Run the whole pipeline and persist the bundle; returns it loaded."""
    params = params or PipelineParams()
    volume_path = Path(volume_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else volume_path.with_suffix(".json")
    if not sidecar_path.exists():
        raise FileNotFoundError(f"sidecar file not found: {sidecar_path}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "clusterings").mkdir(exist_ok=True)
    (out / "previews").mkdir(exist_ok=True)
    marker = out / INCOMPLETE_MARKER
    marker.write_text("precompute in progress\n")

    timings: dict[str, float] = {}

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            result = fn()
        except Exception as e:
            raise StageError(name, e) from e
        timings[name] = time.perf_counter() - t0
        return result

    meta = load_sidecar(sidecar_path)
    vol = stage("load", lambda: load_raw_volume(volume_path, meta))
    if params.smooth_sigma > 0:
        vol = stage("smooth", lambda: gaussian_smooth(vol, params.smooth_sigma))

    slic_params = SlicParams(
        target_size=params.supervoxel_size,
        compactness=params.compactness,
        max_iterations=params.max_iterations,
        convergence_eps=params.convergence_eps,
    )
    labeling = stage("slic", lambda: compute_supervoxels(vol, slic_params))
    graph = stage("graph", lambda: build_adjacency_graph(
        vol, labeling, size_units=params.size_units, bins=params.bins))
    sweep = SweepConfig(
        initial_range_width=params.initial_range,
        growth_factor=params.growth_factor,
        workers=params.workers,
        threshold_rule=params.threshold_rule,
    )
    intervals = stage("exhaustive_clustering", lambda: exhaustive_cluster(graph, sweep))
    catalog = stage("catalog", lambda: catalog_regions(intervals, labeling))
    metaclusters = stage("metaclusters", lambda: reverse_delete_cluster(
        catalog, labeling, t=params.jaccard_threshold))
    tree = stage("tree", lambda: build_tree(metaclusters, labeling))

    def write_files():
        _dump_json(vol.meta.to_dict(), out / "meta.json")
        vol.data.astype("<f4").tofile(out / "volume.f32")
        labeling.labels.astype("<u4").tofile(out / "labels.u32")
        hists = graph.histograms
        stats = labeling.stats_records()
        for rec, h in zip(stats, hists):
            rec["histogram"] = [float(x) for x in h]
        _dump_json({"count": labeling.count, "target_size": labeling.target_size,
                    "supervoxels": stats}, out / "svstats.json")
        with open(out / "edges.bin", "wb") as f:
            f.write(graph.to_bytes())
        records, blob = _intervals_records(intervals, graph.node_count)
        _dump_json({"node_count": graph.node_count, "intervals": records},
                   out / "clusterings" / "intervals.json")
        with open(out / "clusterings" / "partitions.bin", "wb") as f:
            f.write(blob)
        _dump_json({"regions": catalog.to_records()}, out / "regions.json")
        _dump_json({"metaclusters": [mc.to_record() for mc in metaclusters]},
                   out / "metaclusters.json")
        _dump_json({"nodes": tree.to_records(), "report": tree.build_report},
                   out / "tree.json")
        if not (out / "bookmarks.json").exists():
            _dump_json({"bookmarks": [], "next_id": 1}, out / "bookmarks.json")

    stage("write", write_files)

    def eager_previews():
        for inst in tree.root.children:
            node = tree.nodes[inst]
            mc = tree.metaclusters[node.metacluster_id]
            png = viz.encode_png(viz.render_overlap_preview(mc, labeling, "z"))
            (out / "previews" / f"node_{inst}_z.png").write_bytes(png)

    stage("previews", eager_previews)

    manifest = {
        "format_version": FORMAT_VERSION,
        "parameters": asdict(params),
        "input": {
            "volume": volume_path.name,
            "volume_sha256": _digest(volume_path),
            "sidecar_sha256": _digest(sidecar_path),
        },
    }
    _dump_json(manifest, out / "manifest.json")
    _dump_json(timings, out / "timings.json")
    marker.unlink()
    return ArtifactBundle.load(out)


def _tree_from_records(records, metaclusters, labeling) -> MetaClusterTree:
    """Reconstruct a tree from tree.json without re-deriving the topology."""
    nodes = [
        TreeNode(
            instance_id=r["instance_id"],
            metacluster_id=r["metacluster_id"],
            parent_instance=r["parent_instance"],
            children=list(r["children"]),
            footprint_voxel_size=r["footprint_voxel_size"],
            is_duplicate=r["is_duplicate"],
            canonical_instance=r["canonical_instance"],
        )
        for r in sorted(records, key=lambda r: r["instance_id"])
    ]
    M = len(metaclusters)
    n_sv = labeling.count
    masks = np.zeros((M, n_sv), dtype=bool)
    for i, mc in enumerate(metaclusters):
        masks[i, mc.footprint] = True
    mc_instances: list[list[int]] = [[] for _ in range(M)]
    for node in nodes:
        if node.metacluster_id is not None:
            mc_instances[node.metacluster_id].append(node.instance_id)
    sv_index: list[list[int]] = [[] for _ in range(n_sv)]
    for node in nodes:
        own = np.ones(n_sv, dtype=bool) if node.metacluster_id is None \
            else masks[node.metacluster_id].copy()
        for c in node.children:
            own &= ~masks[nodes[c].metacluster_id]
        for sv in np.nonzero(own)[0].tolist():
            sv_index[sv].append(node.instance_id)
    return MetaClusterTree(metaclusters, nodes, mc_instances, sv_index, masks,
                           n_sv, int(labeling.voxel_counts.sum()), {})


class ArtifactBundle:
    """In-memory view of a bundle directory plus the bookmark store."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self._bookmark_lock = threading.Lock()

    @classmethod
    def load(cls, directory) -> "ArtifactBundle":
        self = cls(directory)
        d = self.directory
        if (d / INCOMPLETE_MARKER).exists():
            raise InvalidBundleError(f"bundle {d} is marked incomplete")
        for required in ("manifest.json", "meta.json", "volume.f32", "labels.u32",
                         "svstats.json", "tree.json", "metaclusters.json",
                         "regions.json"):
            if not (d / required).exists():
                raise InvalidBundleError(f"bundle {d} is missing {required}")

        self.manifest = json.loads((d / "manifest.json").read_text())
        meta = VolumeMeta.from_dict(json.loads((d / "meta.json").read_text()))
        data = np.fromfile(d / "volume.f32", dtype="<f4")
        self.volume = ScalarVolume(meta=meta, data=data)

        svstats = json.loads((d / "svstats.json").read_text())
        labels = np.fromfile(d / "labels.u32", dtype="<u4").astype(np.uint32)
        count = svstats["count"]
        recs = svstats["supervoxels"]
        self.labeling = SuperVoxelLabeling(
            labels=labels,
            count=count,
            dims=meta.dims,
            voxel_counts=np.array([r["voxel_count"] for r in recs], dtype=np.int64),
            centroids=np.array([r["centroid"] for r in recs], dtype=np.float64),
            mean_intensity=np.array([r["mean_intensity"] for r in recs]),
            bboxes=np.array([r["bbox"] for r in recs], dtype=np.int64),
            target_size=svstats.get("target_size", 0),
        )

        regions = json.loads((d / "regions.json").read_text())["regions"]
        self.catalog = RegionCatalog(
            regions=[
                Region(supervoxels=np.array(r["supervoxels"], dtype=np.int64),
                       voxel_size=r["voxel_size"], provenance=r["provenance"])
                for r in regions
            ],
            n_supervoxels=count,
        )

        mcs = json.loads((d / "metaclusters.json").read_text())["metaclusters"]
        self.metaclusters = [
            MetaCluster(
                id=m["id"],
                member_region_ids=m["members"],
                footprint=np.array([p[0] for p in m["overlap"]], dtype=np.int64),
                footprint_voxel_size=m["footprint_voxel_size"],
                overlap_counts=np.array([p[1] for p in m["overlap"]], dtype=np.int64),
            )
            for m in mcs
        ]
        tree_doc = json.loads((d / "tree.json").read_text())
        self.tree = _tree_from_records(tree_doc["nodes"], self.metaclusters,
                                       self.labeling)
        self.tree.build_report = tree_doc.get("report", {})
        return self

    def load_intervals(self) -> list:
        d = self.directory / "clusterings"
        doc = json.loads((d / "intervals.json").read_text())
        blob = (d / "partitions.bin").read_bytes()
        n = doc["node_count"]
        out = []
        for rec in doc["intervals"]:
            off = rec["partition_offset"]
            labels = np.frombuffer(blob, dtype="<u4", count=n, offset=off)
            out.append(IntervalClustering(
                k_start=rec["k_start"],
                k_end=math.inf if rec["k_end"] is None else rec["k_end"],
                partition=labels.astype(np.uint32),
                region_count=rec["region_count"],
            ))
        return out

    # --- bookmarks -------------------------------------------------------

    def _read_bookmark_doc(self) -> dict:
        path = self.directory / "bookmarks.json"
        if not path.exists():
            return {"bookmarks": [], "next_id": 1}
        return json.loads(path.read_text())

    def list_bookmarks(self) -> list:
        doc = self._read_bookmark_doc()
        return [viz.Bookmark.from_dict(b) for b in doc["bookmarks"]]

    def get_bookmark(self, bm_id: int):
        for bm in self.list_bookmarks():
            if bm.id == bm_id:
                return bm
        return None

    def add_bookmark(self, bookmark: viz.Bookmark) -> viz.Bookmark:
        with self._bookmark_lock:
            doc = self._read_bookmark_doc()
            bookmark.id = doc["next_id"]
            doc["next_id"] += 1
            doc["bookmarks"].append(bookmark.to_dict())
            _dump_json(doc, self.directory / "bookmarks.json")
        return bookmark

    def update_bookmark(self, bookmark: viz.Bookmark) -> bool:
        with self._bookmark_lock:
            doc = self._read_bookmark_doc()
            for i, b in enumerate(doc["bookmarks"]):
                if b["id"] == bookmark.id:
                    doc["bookmarks"][i] = bookmark.to_dict()
                    _dump_json(doc, self.directory / "bookmarks.json")
                    return True
        return False

    def delete_bookmark(self, bm_id: int) -> bool:
        with self._bookmark_lock:
            doc = self._read_bookmark_doc()
            before = len(doc["bookmarks"])
            doc["bookmarks"] = [b for b in doc["bookmarks"] if b["id"] != bm_id]
            if len(doc["bookmarks"]) == before:
                return False
            _dump_json(doc, self.directory / "bookmarks.json")
        return True

    # --- derived assets --------------------------------------------------

    def resolve_selection_supervoxels(self, selections) -> np.ndarray:
        """Union of super-voxels referenced by (instance, region ids) pairs;
        an empty region list means the whole node footprint."""
        parts = []
        for inst, region_ids in selections:
            node = self.tree.nodes[inst]
            if node.metacluster_id is None:
                raise ValueError("cannot bookmark the root")
            mc = self.metaclusters[node.metacluster_id]
            if region_ids:
                for rid in region_ids:
                    if rid not in mc.member_region_ids:
                        raise ValueError(f"region {rid} is not a member of the node")
                    parts.append(self.catalog.regions[rid].supervoxels)
            else:
                parts.append(mc.footprint)
        if not parts:
            raise ValueError("empty selection")
        return np.unique(np.concatenate(parts))

    def preview_png(self, instance_id: int, axis: str = "z") -> bytes:
        """Lazy per-node preview with an on-disk cache."""
        path = self.directory / "previews" / f"node_{instance_id}_{axis}.png"
        if path.exists():
            return path.read_bytes()
        node = self.tree.nodes[instance_id]
        if node.metacluster_id is None:
            raise ValueError("root has no preview")
        with self._bookmark_lock:
            mc = self.metaclusters[node.metacluster_id]
            png = viz.encode_png(viz.render_overlap_preview(mc, self.labeling, axis))
            path.parent.mkdir(exist_ok=True)
            path.write_bytes(png)
        return png

    def region_mask_runs(self, region_id: int, axis: str, index: int):
        """Run-length encoded rows [(start, len), ...] of a region's slice mask."""
        region = self.catalog.regions[region_id]
        lab_sl = viz._slice3(self.labeling.as_3d(), axis, index)
        mask = np.isin(lab_sl, region.supervoxels)
        rows = []
        for row in mask:
            runs = []
            diff = np.diff(row.astype(np.int8))
            starts = np.nonzero(diff == 1)[0] + 1
            ends = np.nonzero(diff == -1)[0] + 1
            if row[0]:
                starts = np.concatenate([[0], starts])
            if row[-1]:
                ends = np.concatenate([ends, [len(row)]])
            for s, e in zip(starts, ends):
                runs.append([int(s), int(e - s)])
            rows.append(runs)
        return rows
