"""Command line interface: phantom generation, precompute, serve, query."""

from __future__ import annotations

import json
import math
from pathlib import Path

import click

from .bundle import ArtifactBundle, PipelineParams, precompute_bundle
from .mctree import FilterSpec, SearchQuery, filter_tree, search_nodes
from .volume import SpherePhantomSpec, generate_spheres_phantom, save_raw_volume


@click.group()
def main():
    """Exhaustive super-voxel clustering and volume exploration."""


@main.command("gen-phantom")
@click.argument("spec_json", type=click.Path(exists=True))
@click.argument("out_prefix", type=click.Path())
def gen_phantom(spec_json, out_prefix):
    """Generate a spheres phantom volume from a JSON spec.

    Writes OUT_PREFIX.raw, OUT_PREFIX.json (sidecar) and OUT_PREFIX_truth.u32.
    """
    with open(spec_json) as f:
        spec = SpherePhantomSpec.from_dict(json.load(f))
    vol, truth = generate_spheres_phantom(spec)
    out = Path(out_prefix)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_raw_volume(vol, out.with_suffix(".raw"), out.with_suffix(".json"))
    truth.astype("<u4").tofile(f"{out}_truth.u32")
    click.echo(f"wrote {out}.raw ({'x'.join(map(str, vol.meta.dims))}, "
               f"range {vol.meta.scalar_range[0]:.1f}..{vol.meta.scalar_range[1]:.1f})")


@main.command()
@click.argument("volume", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="bundle directory")
@click.option("--sidecar", type=click.Path(exists=True), default=None,
              help="sidecar JSON (defaults to VOLUME with .json suffix)")
@click.option("--supervoxel-size", default=2197, show_default=True)
@click.option("--compactness", default=0.1, show_default=True)
@click.option("--bins", default=64, show_default=True)
@click.option("--jaccard-threshold", default=0.3, show_default=True)
@click.option("--initial-range", default=50.0, show_default=True)
@click.option("--growth-factor", default=1.5, show_default=True)
@click.option("--workers", default=12, show_default=True)
@click.option("--smooth-sigma", default=0.0, show_default=True)
@click.option("--size-units", type=click.Choice(["voxels", "nodes"]),
              default="voxels", show_default=True)
@click.option("--threshold-rule", type=click.Choice(["max", "min"]),
              default="max", show_default=True)
def precompute(volume, out, sidecar, supervoxel_size, compactness, bins,
               jaccard_threshold, initial_range, growth_factor, workers,
               smooth_sigma, size_units, threshold_rule):
    """Run the full pipeline over a raw volume into a bundle directory."""
    params = PipelineParams(
        supervoxel_size=supervoxel_size,
        compactness=compactness,
        bins=bins,
        jaccard_threshold=jaccard_threshold,
        initial_range=initial_range,
        growth_factor=growth_factor,
        workers=workers,
        smooth_sigma=smooth_sigma,
        size_units=size_units,
        threshold_rule=threshold_rule,
    )
    bundle = precompute_bundle(volume, out, params, sidecar_path=sidecar)
    timings = json.loads((bundle.directory / "timings.json").read_text())
    for stage, secs in timings.items():
        click.echo(f"  {stage:<22s} {secs:8.2f} s")
    click.echo(f"bundle ready: {bundle.directory} "
               f"({len(bundle.metaclusters)} meta-clusters, "
               f"{len(bundle.tree.nodes)} tree nodes)")


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static-dir", type=click.Path(), default=None,
              help="frontend build to serve at /")
def serve(bundle_dir, port, host, static_dir):
    """Serve the exploration API for a precomputed bundle."""
    from .server import serve as run_server

    run_server(bundle_dir, port=port, host=host, static_dir=static_dir)


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--voxel", "voxels", multiple=True, required=True,
              help="brushed voxel as x,y,z (repeatable)")
@click.option("--min", "min_size", default=0, show_default=True)
@click.option("--max", "max_size", default=None, type=float)
def query(bundle_dir, voxels, min_size, max_size):
    """Search meta-clusters containing the given voxels within size bounds."""
    bundle = ArtifactBundle.load(bundle_dir)
    pts = []
    for v in voxels:
        try:
            x, y, z = (int(c) for c in v.split(","))
        except ValueError:
            raise click.BadParameter(f"voxel must be x,y,z, got {v!r}")
        pts.append((x, y, z))
    q = SearchQuery(brushed_voxels=pts, min_size=min_size,
                    max_size=math.inf if max_size is None else max_size)
    results = search_nodes(bundle.tree, q, bundle.labeling)
    out = [
        {"metacluster_id": mc_id, "instance_id": inst,
         "footprint_voxel_size": int(bundle.metaclusters[mc_id].footprint_voxel_size)}
        for mc_id, inst in results
    ]
    click.echo(json.dumps({"results": out}, indent=2))


@main.command("export-tree")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--min-size", default=0, show_default=True)
@click.option("--max-branch", default=None, type=int)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="write to file instead of stdout")
def export_tree(bundle_dir, min_size, max_branch, out_path):
    """Dump the (optionally filtered) meta-cluster tree as JSON."""
    bundle = ArtifactBundle.load(bundle_dir)
    view = filter_tree(bundle.tree, FilterSpec(min_voxel_size=min_size,
                                               max_branching=max_branch))
    doc = json.dumps({"nodes": view.to_records()}, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(doc)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(doc)


if __name__ == "__main__":
    main()
