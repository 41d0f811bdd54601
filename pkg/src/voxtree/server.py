"""HTTP exploration API over a precomputed bundle.

Read-only except for bookmarks; every other response is a pure function of
(bundle, request), so concurrent queries are safe.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import viz
from .bundle import ArtifactBundle
from .mctree import FilterSpec, SearchQuery, containing_node, filter_tree, search_nodes
from .volume import AXES, slice_extract


class SearchBody(BaseModel):
    voxels: list[list[int]]
    min: int = 0
    max: float | None = None


class BookmarkBody(BaseModel):
    name: str = ""
    selections: list = Field(default_factory=list)   # [[instance_id, [region ids]]]
    render_mode: str = "flat"
    color: list[int] = Field(default_factory=lambda: [255, 0, 0])
    opacity: float = 1.0
    transfer_function: dict | None = None


def _parse_window(window: str | None, bundle: ArtifactBundle):
    if window:
        try:
            lo, hi = (float(v) for v in window.split(","))
        except ValueError:
            raise HTTPException(400, "window must be 'lo,hi'")
    else:
        lo, hi = bundle.volume.meta.scalar_range
        if hi <= lo:
            hi = lo + 1.0
    if hi <= lo:
        raise HTTPException(400, "window must satisfy lo < hi")
    return lo, hi


def _check_axis_index(bundle, axis: str, index: int):
    if axis not in AXES:
        raise HTTPException(400, f"axis must be one of x, y, z, got {axis!r}")
    if not 0 <= index < bundle.volume.meta.dims[AXES[axis]]:
        raise HTTPException(404, f"slice index {index} out of range")


def create_app(bundle: ArtifactBundle | str | Path,
               static_dir: str | Path | None = None) -> FastAPI:
    if not isinstance(bundle, ArtifactBundle):
        bundle = ArtifactBundle.load(bundle)
    app = FastAPI(title="voxtree exploration service")

    @app.get("/api/meta")
    def get_meta():
        meta = bundle.volume.meta
        return {
            "dims": list(meta.dims),
            "spacing": list(meta.spacing),
            "scalar_range": list(meta.scalar_range),
            "supervoxel_count": bundle.labeling.count,
            "metacluster_count": len(bundle.metaclusters),
            "instance_count": len(bundle.tree.nodes),
            "manifest": bundle.manifest,
        }

    @app.get("/api/slice/{axis}/{index}")
    def get_slice(axis: str, index: int, request: Request, window: str | None = None):
        _check_axis_index(bundle, axis, index)
        sl = slice_extract(bundle.volume, axis, index)
        if "application/octet-stream" in request.headers.get("accept", ""):
            return Response(content=sl.astype("<f4").tobytes(),
                            media_type="application/octet-stream",
                            headers={"X-Shape": f"{sl.shape[0]},{sl.shape[1]}"})
        lo, hi = _parse_window(window, bundle)
        gray = viz.window_to_u8(sl, lo, hi)
        rgb = np.repeat(gray[..., None], 3, axis=-1)
        return Response(content=viz.encode_png(rgb), media_type="image/png")

    @app.get("/api/tree")
    def get_tree(minSize: int = 0, maxBranch: int | None = None):
        spec = FilterSpec(min_voxel_size=minSize, max_branching=maxBranch)
        view = filter_tree(bundle.tree, spec)
        return {"min_size": minSize, "max_branching": maxBranch,
                "nodes": view.to_records()}

    @app.get("/api/node/{instance}")
    def get_node(instance: int):
        if not 0 <= instance < len(bundle.tree.nodes):
            raise HTTPException(404, f"no instance {instance}")
        node = bundle.tree.nodes[instance]
        record = {
            "instance_id": node.instance_id,
            "metacluster_id": node.metacluster_id,
            "parent_instance": node.parent_instance,
            "children": list(node.children),
            "footprint_voxel_size": int(node.footprint_voxel_size),
            "is_duplicate": node.is_duplicate,
            "canonical_instance": node.canonical_instance,
            "members": [],
        }
        if node.metacluster_id is not None:
            mc = bundle.metaclusters[node.metacluster_id]
            record["members"] = [
                {"region_id": rid,
                 "voxel_size": int(bundle.catalog.regions[rid].voxel_size)}
                for rid in mc.member_region_ids
            ]
        return record

    @app.get("/api/node/{instance}/preview.png")
    def get_preview(instance: int, axis: str = "z"):
        if not 0 <= instance < len(bundle.tree.nodes):
            raise HTTPException(404, f"no instance {instance}")
        if axis not in AXES:
            raise HTTPException(400, f"axis must be one of x, y, z")
        if bundle.tree.nodes[instance].metacluster_id is None:
            raise HTTPException(400, "the root has no preview")
        return Response(content=bundle.preview_png(instance, axis),
                        media_type="image/png")

    @app.get("/api/region/{region_id}/mask/{axis}/{index}")
    def get_region_mask(region_id: int, axis: str, index: int):
        if not 0 <= region_id < len(bundle.catalog):
            raise HTTPException(404, f"no region {region_id}")
        _check_axis_index(bundle, axis, index)
        rows = bundle.region_mask_runs(region_id, axis, index)
        return {"region_id": region_id, "axis": axis, "index": index, "rows": rows}

    @app.post("/api/search")
    def post_search(body: SearchBody):
        try:
            q = SearchQuery(
                brushed_voxels=body.voxels,
                min_size=body.min,
                max_size=math.inf if body.max is None else body.max,
            )
            results = search_nodes(bundle.tree, q, bundle.labeling)
        except ValueError as e:
            raise HTTPException(400, str(e))
        return {
            "results": [
                {"metacluster_id": mc_id, "instance_id": inst,
                 "footprint_voxel_size":
                     int(bundle.metaclusters[mc_id].footprint_voxel_size)}
                for mc_id, inst in results
            ]
        }

    @app.post("/api/containing-node")
    def post_containing(body: SearchBody):
        try:
            node = containing_node(bundle.tree, body.voxels, bundle.labeling)
        except ValueError as e:
            raise HTTPException(400, str(e))
        return {"instance_id": node.instance_id,
                "metacluster_id": node.metacluster_id,
                "footprint_voxel_size": int(node.footprint_voxel_size)}

    # --- bookmarks -------------------------------------------------------

    def _bookmark_from_body(body: BookmarkBody, bm_id: int = 0) -> viz.Bookmark:
        selections = [(int(s[0]), list(s[1])) for s in body.selections]
        svs = bundle.resolve_selection_supervoxels(selections)
        tf = None
        if body.transfer_function is not None:
            tf = viz.TransferFunction1D.from_dict(body.transfer_function)
        elif body.render_mode == "tf1d":
            tf = viz.auto_transfer_function(bundle.volume, svs, bundle.labeling)
        return viz.Bookmark(
            id=bm_id, name=body.name, selections=selections,
            render_mode=body.render_mode, color=tuple(body.color),
            opacity=body.opacity, transfer_function=tf, supervoxel_ids=svs,
        )

    @app.get("/api/bookmarks")
    def list_bookmarks():
        return {"bookmarks": [bm.to_dict() for bm in bundle.list_bookmarks()]}

    @app.post("/api/bookmarks", status_code=201)
    def create_bookmark(body: BookmarkBody):
        try:
            bm = bundle.add_bookmark(_bookmark_from_body(body))
        except ValueError as e:
            raise HTTPException(400, str(e))
        return bm.to_dict()

    @app.put("/api/bookmarks/{bm_id}")
    def update_bookmark(bm_id: int, body: BookmarkBody):
        if bundle.get_bookmark(bm_id) is None:
            raise HTTPException(404, f"no bookmark {bm_id}")
        try:
            bm = _bookmark_from_body(body, bm_id=bm_id)
        except ValueError as e:
            raise HTTPException(400, str(e))
        bundle.update_bookmark(bm)
        return bm.to_dict()

    @app.delete("/api/bookmarks/{bm_id}")
    def delete_bookmark(bm_id: int):
        if not bundle.delete_bookmark(bm_id):
            raise HTTPException(404, f"no bookmark {bm_id}")
        return JSONResponse({"deleted": bm_id})

    @app.get("/api/composite/{axis}/{index}")
    def get_composite(axis: str, index: int, bookmarks: str = "",
                      window: str | None = None):
        _check_axis_index(bundle, axis, index)
        lo, hi = _parse_window(window, bundle)
        selected = []
        if bookmarks:
            all_bm = {bm.id: bm for bm in bundle.list_bookmarks()}
            for token in bookmarks.split(","):
                try:
                    bm_id = int(token)
                except ValueError:
                    raise HTTPException(400, f"bad bookmark id {token!r}")
                if bm_id not in all_bm:
                    raise HTTPException(404, f"no bookmark {bm_id}")
                selected.append(all_bm[bm_id])
        img = viz.render_composite_slice(bundle.volume, bundle.labeling, selected,
                                         axis, index, (lo, hi))
        return Response(content=viz.encode_png(img), media_type="image/png")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(bundle_dir, port: int = 8000, host: str = "127.0.0.1",
          static_dir=None) -> None:
    import uvicorn

    app = create_app(bundle_dir, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
