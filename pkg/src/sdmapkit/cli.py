"""Command-line frontend: ingest -> rasterize -> perturb -> evaluate -> plot.

Exit codes: 0 success, 1 computation error, 2 usage/IO error. All commands
are deterministic for identical inputs and flags.

A JSON config file passed as `sdmapkit --config cfg.json <command> ...`
supplies per-command option defaults: {"ingest": {"density": 1.0}, ...}.
Unknown command or option keys are rejected.
"""
from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from . import formats, geo, grid, metrics, osm, raster
from .errors import SdMapKitError

SWEEP_TRANSLATIONS = (0.25, 0.5, 1.0, 2.0)
SWEEP_ROTATIONS = (0.0, 5.0, 10.0)


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        with open(value) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {value}: {exc}")
    if not isinstance(cfg, dict):
        raise click.UsageError("config must be a JSON object")
    for cmd_name, options in cfg.items():
        cmd = main.commands.get(cmd_name)
        if cmd is None:
            raise click.UsageError(f"config: unknown command {cmd_name!r}")
        known = {p.name for p in cmd.params}
        for key in options:
            if key not in known:
                raise click.UsageError(
                    f"config: unknown option {key!r} for {cmd_name!r}")
    ctx.default_map = cfg
    return value


@click.group()
@click.option("--config", callback=_load_config, expose_value=False,
              is_eager=True, help="JSON file with per-command option defaults.")
def main():
    """SD map toolkit: OSM ingestion, BEV rasterization, and evaluation."""


def _read_poses(path):
    with open(path) as fh:
        payload = json.load(fh)
    origin = None
    if isinstance(payload, dict):
        if "origin" in payload:
            origin = geo.GeoPoint(payload["origin"]["lat"],
                                  payload["origin"]["lon"])
        records = payload["poses"]
    else:
        records = payload
    poses = [geo.EgoPose(r["x"], r["y"], r.get("heading", 0.0))
             for r in records]
    return poses, origin


@main.command()
@click.argument("osm_xml", type=click.Path(exists=True, dir_okay=False))
@click.argument("poses", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
@click.option("--margin", type=float, default=200.0, show_default=True,
              help="Bounding-region margin around the poses, meters.")
@click.option("--density", type=float, default=1.0, show_default=True,
              help="Resampling density, meters per waypoint.")
@click.option("--pose-index", type=int, default=0, show_default=True,
              help="Which pose anchors the ego-centric frame.")
def ingest(osm_xml, poses, out, margin, density, pose_index):
    """Parse OSM XML and write an ego-centric resampled graph (sdg-json).

    POSES is a JSON array of {x, y, heading} records, optionally wrapped as
    {"origin": {"lat", "lon"}, "poses": [...]}. Without an explicit origin
    the mean OSM node coordinate is used as the projection anchor.
    """
    try:
        with open(osm_xml, "rb") as fh:
            parsed = osm.parse_osm_xml(fh)
        pose_list, origin = _read_poses(poses)
        if not (0 <= pose_index < len(pose_list)):
            _fail(f"pose index {pose_index} out of range", 2)
        if origin is None:
            if not parsed.nodes:
                _fail("OSM document has no nodes and poses give no origin")
            origin = geo.GeoPoint(
                sum(n.location.lat for n in parsed.nodes) / len(parsed.nodes),
                sum(n.location.lon for n in parsed.nodes) / len(parsed.nodes))
        region = geo.bounding_region(pose_list, margin)
        kept = osm.filter_highways(parsed.ways)
        graph = osm.build_graph(kept, parsed.node_store, origin,
                                pose_list[pose_index], region,
                                annotation_nodes=parsed.nodes)
        graph = osm.resample_graph(graph, density)
        with open(out, "w") as fh:
            formats.write_sdg_json(graph, fh, origin=origin,
                                   ego=pose_list[pose_index])
    except (SdMapKitError, OSError, KeyError, ValueError) as exc:
        _fail(str(exc))
    for diag in parsed.diagnostics:
        click.echo(diag, err=True)
    spacings = [np.hypot(graph.nodes[e.b].x - graph.nodes[e.a].x,
                         graph.nodes[e.b].y - graph.nodes[e.a].y)
                for e in graph.edges]
    click.echo(
        f"ingested {len(graph.nodes)} nodes, {len(graph.edges)} edges "
        f"({len(parsed.ways) - len(kept)} non-highway ways skipped, "
        f"{len(parsed.diagnostics)} dropped); "
        f"max spacing {max(spacings) if spacings else 0.0:.3f} m",
        err=True)


def _spec_options(fn):
    fn = click.option("--x-range", nargs=2, type=float, default=(-50.0, 50.0),
                      show_default=True)(fn)
    fn = click.option("--y-range", nargs=2, type=float, default=(-25.0, 25.0),
                      show_default=True)(fn)
    fn = click.option("--resolution", type=float, default=0.5,
                      show_default=True)(fn)
    return fn


@main.command()
@click.argument("sdg", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True,
              help="Output bev-f32 raster path.")
@click.option("--png", type=click.Path(dir_okay=False),
              help="Also write a PNG rendering.")
@click.option("--palette", type=click.Path(exists=True, dir_okay=False),
              help="Palette JSON overriding the default class styling.")
@_spec_options
def rasterize(sdg, out, png, palette, x_range, y_range, resolution):
    """Render an sdg-json graph onto a BEV canvas (bev-f32, optional PNG)."""
    try:
        with open(sdg) as fh:
            graph, _ = formats.read_sdg_json(fh)
        spec = raster.BevSpec(x_range=tuple(x_range), y_range=tuple(y_range),
                              resolution=resolution)
        if palette:
            with open(palette) as fh:
                pal = raster.palette_from_dict(json.load(fh))
        else:
            pal = raster.default_palette()
        canvas = raster.rasterize(graph, spec, pal)
        with open(out, "wb") as fh:
            formats.write_bev_f32(canvas, fh)
        if png:
            with open(png, "wb") as fh:
                fh.write(raster.canvas_to_png(canvas, pal))
    except (SdMapKitError, OSError, json.JSONDecodeError, ValueError) as exc:
        _fail(str(exc))
    if canvas.is_empty():
        click.echo("empty canvas: no geometry intersects the extent",
                   err=True)


@main.command()
@click.argument("pred", type=click.Path(exists=True, dir_okay=False))
@click.argument("gt", type=click.Path(exists=True, dir_okay=False))
@click.option("--task", type=click.Choice(["perception", "reasoning"]),
              default="reasoning", show_default=True)
@click.option("--ols-variant", type=click.Choice(["sqrt", "mean"]),
              default="sqrt", show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False),
              help="Write the JSON report here instead of stdout.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              help="Also write a one-row CSV summary.")
def evaluate(pred, gt, task, ols_variant, out, csv_path):
    """Evaluate olann-json predictions against ground truth."""
    threads = int(os.environ.get("SDMAPKIT_THREADS", "1"))
    try:
        with open(pred) as fh:
            pred_scenes = formats.read_olann_json(fh)
        with open(gt) as fh:
            gt_scenes = formats.read_olann_json(fh)
        report = metrics.evaluate_scenes(pred_scenes, gt_scenes, task=task,
                                         ols_variant=ols_variant,
                                         threads=max(1, threads))
    except (SdMapKitError, OSError, ValueError) as exc:
        _fail(str(exc))
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(payload + "\n")
    else:
        click.echo(payload)
    if csv_path:
        row = {k: v for k, v in report.to_dict().items()
               if not isinstance(v, dict)}
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=sorted(row))
            writer.writeheader()
            writer.writerow(row)


@main.command()
@click.argument("sdg", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(),
              help="Output sdg-json path (or directory with --sweep).")
@click.option("--trans-noise", type=float, default=0.0, show_default=True,
              help="Translation magnitude, meters.")
@click.option("--rot-noise", type=float, default=0.0, show_default=True,
              help="Rotation magnitude, degrees.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sweep", is_flag=True,
              help="Emit the full 4x3 noise grid into the output directory.")
def perturb(sdg, out, trans_noise, rot_noise, seed, sweep):
    """Apply seeded rigid localization noise to a graph."""
    if out is None:
        _fail("missing -o/--out", 2)
    try:
        with open(sdg) as fh:
            graph, header = formats.read_sdg_json(fh)
        origin = (geo.GeoPoint(header["origin_lat"], header["origin_lon"])
                  if "origin_lat" in header else None)
        ego = (geo.EgoPose(**header["ego_pose"])
               if "ego_pose" in header else None)
        if sweep:
            os.makedirs(out, exist_ok=True)
            for t in SWEEP_TRANSLATIONS:
                for r in SWEEP_ROTATIONS:
                    noisy = grid.perturb(graph, grid.NoiseSpec(t, r, seed))
                    name = f"trans_{t:g}m_rot_{r:g}deg.sdg.json"
                    with open(os.path.join(out, name), "w") as fh:
                        formats.write_sdg_json(noisy, fh, origin, ego)
            click.echo(f"wrote {len(SWEEP_TRANSLATIONS) * len(SWEEP_ROTATIONS)}"
                       f" perturbed graphs to {out}", err=True)
        else:
            noisy = grid.perturb(graph,
                                 grid.NoiseSpec(trans_noise, rot_noise, seed))
            with open(out, "w") as fh:
                formats.write_sdg_json(noisy, fh, origin, ego)
    except (SdMapKitError, OSError, ValueError) as exc:
        _fail(str(exc))


@main.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def plot(source, out):
    """Plot a metric report (bar chart) or an sdg-json graph overlay."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    try:
        with open(source) as fh:
            first = fh.read(1)
            fh.seek(0)
            if first != "{":
                _fail(f"{source} is not a JSON artifact")
            head = json.loads(fh.readline())
            fh.seek(0)
            if head.get("type") == "header":
                graph, _ = formats.read_sdg_json(fh)
                fig, ax = plt.subplots(figsize=(6, 6))
                for e in graph.edges:
                    na, nb = graph.nodes[e.a], graph.nodes[e.b]
                    ax.plot([na.y, nb.y], [na.x, nb.x],
                            color="tab:gray", linewidth=1)
                pos = graph.positions
                if len(pos):
                    ax.scatter(pos[:, 1], pos[:, 0], s=4, color="tab:blue")
                ax.scatter([0], [0], marker="^", s=60, color="tab:red")
                ax.set_xlabel("lateral y (m)")
                ax.set_ylabel("forward x (m)")
                ax.invert_xaxis()
                ax.set_aspect("equal")
            else:
                report = json.load(fh)
                keys = [k for k in ("det_l", "det_t", "top_ll", "top_lt",
                                    "ols", "chamfer_map")
                        if report.get(k) is not None]
                vals = [report[k] for k in keys]
                fig, ax = plt.subplots(figsize=(6, 4))
                ax.bar(keys, vals, color="tab:blue")
                ax.set_ylim(0, 1)
                ax.set_ylabel("score")
        fig.savefig(out, format="png", dpi=100,
                    metadata={"Software": "sdmapkit"})
        plt.close(fig)
    except (SdMapKitError, OSError, json.JSONDecodeError, ValueError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
