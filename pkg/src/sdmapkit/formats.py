"""Serialization for the three toolkit artifacts.

sdg-json   line-delimited JSON graph: a header record, then node records,
           then edge records.
bev-f32    binary raster: little-endian header (magic "BEV1", u32 H, W, C,
           f32 x_min, x_max, y_min, y_max, resolution) followed by
           row-major float32 data.
olann-json line-delimited JSON scenes: centerlines (waypoints + score),
           traffic elements (box, class, score), adjacency matrices.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import IO, Optional, Union

import numpy as np

from . import geo
from .errors import SchemaError, SdMapKitError
from .metrics import Centerline, SceneAnnotation, TrafficElement
from .osm import GraphEdge, GraphNode, HighwayClass, SdMapGraph
from .raster import BevCanvas, BevSpec

SDG_VERSION = 1
BEV_MAGIC = b"BEV1"


# ---------------------------------------------------------------------------
# sdg-json

def write_sdg_json(graph: SdMapGraph, stream: IO[str],
                   origin: Optional[geo.GeoPoint] = None,
                   ego: Optional[geo.EgoPose] = None) -> None:
    header = {"type": "header", "version": SDG_VERSION}
    if origin is not None:
        header["origin_lat"] = origin.lat
        header["origin_lon"] = origin.lon
    if ego is not None:
        header["ego_pose"] = {"x": ego.x, "y": ego.y, "heading": ego.heading}
    stream.write(json.dumps(header) + "\n")
    for i, n in enumerate(graph.nodes):
        rec = {"type": "node", "idx": i, "x": n.x, "y": n.y,
               "class": n.cls.value if n.cls else None}
        stream.write(json.dumps(rec) + "\n")
    for e in graph.edges:
        stream.write(json.dumps({"type": "edge", "a": e.a, "b": e.b}) + "\n")


def read_sdg_json(stream: IO[str]) -> tuple:
    """Parse sdg-json into (SdMapGraph, header dict)."""
    header = None
    nodes = []
    edges = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {lineno}: invalid JSON: {exc}") from exc
        kind = rec.get("type")
        if kind == "header":
            if header is not None:
                raise SchemaError(f"line {lineno}: duplicate header")
            if rec.get("version") != SDG_VERSION:
                raise SchemaError(
                    f"line {lineno}: unsupported version {rec.get('version')}")
            header = rec
        elif kind == "node":
            if header is None:
                raise SchemaError(f"line {lineno}: node before header")
            if rec.get("idx") != len(nodes):
                raise SchemaError(
                    f"line {lineno}: node idx {rec.get('idx')} out of order")
            cls = (HighwayClass.parse(rec["class"])
                   if rec.get("class") else None)
            nodes.append(GraphNode(float(rec["x"]), float(rec["y"]), cls))
        elif kind == "edge":
            if header is None:
                raise SchemaError(f"line {lineno}: edge before header")
            a, b = int(rec["a"]), int(rec["b"])
            if not (0 <= a < len(nodes) and 0 <= b < len(nodes)):
                raise SchemaError(
                    f"line {lineno}: edge ({a}, {b}) out of bounds")
            edges.append(GraphEdge(a, b))
        else:
            raise SchemaError(f"line {lineno}: unknown record type {kind!r}")
    if header is None:
        raise SchemaError("missing header record")
    return SdMapGraph(nodes=nodes, edges=edges), header


# ---------------------------------------------------------------------------
# bev-f32

_BEV_HEADER = struct.Struct("<4sIII5f")


def write_bev_f32(canvas: BevCanvas, stream: IO[bytes]) -> None:
    spec = canvas.spec
    h, w, c = canvas.data.shape
    stream.write(_BEV_HEADER.pack(
        BEV_MAGIC, h, w, c,
        spec.x_range[0], spec.x_range[1],
        spec.y_range[0], spec.y_range[1],
        spec.resolution))
    stream.write(np.ascontiguousarray(
        canvas.data, dtype="<f4").tobytes())


def read_bev_f32(stream: IO[bytes]) -> BevCanvas:
    head = stream.read(_BEV_HEADER.size)
    if len(head) < _BEV_HEADER.size:
        raise SchemaError("truncated bev-f32 header")
    magic, h, w, c, x0, x1, y0, y1, res = _BEV_HEADER.unpack(head)
    if magic != BEV_MAGIC:
        raise SchemaError(f"bad magic {magic!r}")
    payload = stream.read()
    expected = h * w * c * 4
    if len(payload) != expected:
        raise SchemaError(
            f"payload is {len(payload)} bytes, header implies {expected}")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    spec = BevSpec(x_range=(x0, x1), y_range=(y0, y1), resolution=res)
    if (spec.h_cells, spec.w_cells) != (h, w):
        raise SchemaError(
            f"header grid ({h}, {w}) inconsistent with extents/resolution")
    return BevCanvas(spec=spec, data=np.array(data))


# ---------------------------------------------------------------------------
# olann-json

def _scene_to_dict(scene: SceneAnnotation, scene_id) -> dict:
    rec = {
        "scene_id": scene_id,
        "centerlines": [
            {"points": cl.points.tolist(),
             **({"score": cl.score} if cl.score is not None else {}),
             **({"label": cl.label} if cl.label is not None else {})}
            for cl in scene.centerlines
        ],
        "traffic_elements": [
            {"box": list(te.box), "class": te.cls,
             **({"score": te.score} if te.score is not None else {})}
            for te in scene.traffic_elements
        ],
    }
    if scene.a_cc is not None:
        rec["a_cc"] = scene.a_cc.tolist()
    if scene.a_ct is not None:
        rec["a_ct"] = scene.a_ct.tolist()
    return rec


def write_olann_json(scenes, stream: IO[str], scene_ids=None) -> None:
    for i, scene in enumerate(scenes):
        sid = scene_ids[i] if scene_ids else i
        stream.write(json.dumps(_scene_to_dict(scene, sid)) + "\n")


def read_olann_json(stream: IO[str]) -> list:
    """Parse olann-json into a list of SceneAnnotation."""
    scenes = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(
                f"record {lineno}: invalid JSON: {exc}") from exc
        try:
            centerlines = [
                Centerline(points=np.array(c["points"], dtype=float),
                           score=c.get("score"), label=c.get("label"))
                for c in rec.get("centerlines", [])
            ]
            traffic = [
                TrafficElement(box=tuple(t["box"]), cls=t.get("class", ""),
                               score=t.get("score"))
                for t in rec.get("traffic_elements", [])
            ]
            scenes.append(SceneAnnotation(
                centerlines=centerlines,
                traffic_elements=traffic,
                a_cc=(np.array(rec["a_cc"], dtype=float)
                      if "a_cc" in rec else None),
                a_ct=(np.array(rec["a_ct"], dtype=float)
                      if "a_ct" in rec else None),
            ))
        except (KeyError, TypeError, ValueError, SdMapKitError) as exc:
            raise SchemaError(f"record {lineno}: {exc}") from exc
    return scenes
