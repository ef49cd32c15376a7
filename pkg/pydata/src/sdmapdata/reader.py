"""Validated readers for the three SD-map artifact formats.

Everything here is read-only: files are opened for reading and never
touched otherwise. Each loaded structure offers ``to_records()`` returning
the plain-JSON shape it was parsed from, so semantic round-trip equality
can be asserted without a file writer.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Union

import numpy as np

from .errors import NotADirectory, SchemaError

SDG_VERSION = 1
BEV_MAGIC = b"BEV1"
_BEV_HEADER = struct.Struct("<4sIII5f")

GRAPH_FILENAME = "graph.sdg.json"
RASTER_FILENAME = "bev.f32"
ANNOTATION_FILENAME = "annotations.olann.json"


# ---------------------------------------------------------------------------
# sdg-json

@dataclass
class GraphNode:
    idx: int
    x: float
    y: float
    cls: Optional[str]


@dataclass
class GraphData:
    """A loaded sdg-json graph: nodes, edges, and the derived adjacency."""

    nodes: List[GraphNode]
    edges: List[tuple]
    header: dict

    @property
    def adjacency(self) -> np.ndarray:
        n = len(self.nodes)
        adj = np.zeros((n, n), dtype=bool)
        for a, b in self.edges:
            adj[a, b] = adj[b, a] = True
        return adj

    def to_records(self) -> List[dict]:
        """The line-record representation this graph was parsed from."""
        records = [dict(self.header)]
        for node in self.nodes:
            records.append({"type": "node", "idx": node.idx,
                            "x": node.x, "y": node.y, "class": node.cls})
        records.extend({"type": "edge", "a": a, "b": b}
                       for a, b in self.edges)
        return records


def load_graph(path) -> GraphData:
    """Load an sdg-json graph, validating record order and references."""
    header = None
    nodes: List[GraphNode] = []
    edges: List[tuple] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(
                    f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise SchemaError(f"line {lineno}: record is not an object")
            kind = rec.get("type")
            if kind == "header":
                if header is not None:
                    raise SchemaError(f"line {lineno}: duplicate header")
                if rec.get("version") != SDG_VERSION:
                    raise SchemaError(
                        f"line {lineno}: unsupported version "
                        f"{rec.get('version')!r}")
                header = rec
            elif kind == "node":
                if header is None:
                    raise SchemaError(f"line {lineno}: node before header")
                try:
                    idx = rec["idx"]
                    x, y = float(rec["x"]), float(rec["y"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise SchemaError(f"line {lineno}: bad node: {exc}")
                if idx != len(nodes):
                    raise SchemaError(
                        f"line {lineno}: node idx {idx} out of order")
                nodes.append(GraphNode(idx, x, y, rec.get("class")))
            elif kind == "edge":
                if header is None:
                    raise SchemaError(f"line {lineno}: edge before header")
                try:
                    a, b = int(rec["a"]), int(rec["b"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise SchemaError(f"line {lineno}: bad edge: {exc}")
                if not (0 <= a < len(nodes) and 0 <= b < len(nodes)):
                    raise SchemaError(
                        f"line {lineno}: edge ({a}, {b}) out of bounds")
                if a == b:
                    raise SchemaError(f"line {lineno}: self-loop on {a}")
                edges.append((a, b))
            else:
                raise SchemaError(
                    f"line {lineno}: unknown record type {kind!r}")
    if header is None:
        raise SchemaError("missing header record")
    return GraphData(nodes=nodes, edges=edges, header=header)


# ---------------------------------------------------------------------------
# bev-f32

@dataclass
class BevRaster:
    """A loaded bev-f32 canvas: float32 data plus grid extents."""

    data: np.ndarray             # (H, W, C) float32 in [0, 1]
    x_range: tuple
    y_range: tuple
    resolution: float

    def to_records(self) -> dict:
        return {
            "x_range": list(self.x_range),
            "y_range": list(self.y_range),
            "resolution": self.resolution,
            "shape": list(self.data.shape),
            "data": self.data.tolist(),
        }


def load_raster(path) -> BevRaster:
    """Load a bev-f32 raster, validating header/payload consistency."""
    with open(path, "rb") as fh:
        head = fh.read(_BEV_HEADER.size)
        if len(head) < _BEV_HEADER.size:
            raise SchemaError("truncated bev-f32 header")
        magic, h, w, c, x0, x1, y0, y1, res = _BEV_HEADER.unpack(head)
        if magic != BEV_MAGIC:
            raise SchemaError(f"bad magic {magic!r}")
        payload = fh.read()
    expected = h * w * c * 4
    if len(payload) != expected:
        raise SchemaError(
            f"payload is {len(payload)} bytes, header implies {expected}")
    if res <= 0:
        raise SchemaError(f"non-positive resolution {res}")
    grid_h = round((x1 - x0) / res)
    grid_w = round((y1 - y0) / res)
    if (grid_h, grid_w) != (h, w):
        raise SchemaError(
            f"header grid ({h}, {w}) inconsistent with extents/resolution")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c).copy()
    if data.size and (data.min() < 0.0 or data.max() > 1.0):
        raise SchemaError("raster values outside [0, 1]")
    return BevRaster(data=data, x_range=(x0, x1), y_range=(y0, y1),
                     resolution=res)


# ---------------------------------------------------------------------------
# olann-json

@dataclass
class Scene:
    """One olann-json scene: centerlines, traffic elements, adjacencies."""

    scene_id: object
    centerlines: List[dict] = field(default_factory=list)
    traffic_elements: List[dict] = field(default_factory=list)
    a_cc: Optional[np.ndarray] = None
    a_ct: Optional[np.ndarray] = None

    def to_records(self) -> dict:
        rec = {
            "scene_id": self.scene_id,
            "centerlines": [dict(c) for c in self.centerlines],
            "traffic_elements": [dict(t) for t in self.traffic_elements],
        }
        if self.a_cc is not None:
            rec["a_cc"] = self.a_cc.tolist()
        if self.a_ct is not None:
            rec["a_ct"] = self.a_ct.tolist()
        return rec


def _parse_scene(rec: dict, lineno: int) -> Scene:
    centerlines = []
    for c in rec.get("centerlines", []):
        pts = np.asarray(c["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise SchemaError(
                f"record {lineno}: centerline needs >= 2 waypoints, "
                f"got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise SchemaError(f"record {lineno}: non-finite waypoint")
        score = c.get("score")
        if score is not None and not 0.0 <= score <= 1.0:
            raise SchemaError(
                f"record {lineno}: score {score} outside [0, 1]")
        centerlines.append(dict(c))
    traffic = []
    for t in rec.get("traffic_elements", []):
        box = t["box"]
        if len(box) != 4 or box[2] <= 0 or box[3] <= 0:
            raise SchemaError(f"record {lineno}: bad box {box}")
        score = t.get("score")
        if score is not None and not 0.0 <= score <= 1.0:
            raise SchemaError(
                f"record {lineno}: score {score} outside [0, 1]")
        traffic.append(dict(t))
    m, k = len(centerlines), len(traffic)
    a_cc = a_ct = None
    if "a_cc" in rec:
        a_cc = np.asarray(rec["a_cc"], dtype=float)
        if a_cc.shape != (m, m):
            raise SchemaError(
                f"record {lineno}: a_cc shape {a_cc.shape} != ({m}, {m})")
    if "a_ct" in rec:
        a_ct = np.asarray(rec["a_ct"], dtype=float)
        if a_ct.shape != (m, k):
            raise SchemaError(
                f"record {lineno}: a_ct shape {a_ct.shape} != ({m}, {k})")
    return Scene(scene_id=rec.get("scene_id"), centerlines=centerlines,
                 traffic_elements=traffic, a_cc=a_cc, a_ct=a_ct)


def load_scenes(path) -> List[Scene]:
    """Load an olann-json annotation file into a list of Scene."""
    scenes = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(
                    f"record {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise SchemaError(
                    f"record {lineno}: scene is not an object")
            try:
                scenes.append(_parse_scene(rec, lineno))
            except (KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, SchemaError):
                    raise
                raise SchemaError(f"record {lineno}: {exc}") from exc
    return scenes


# ---------------------------------------------------------------------------
# scene trees

@dataclass
class SceneHandle:
    """Paths to one scene's artifacts with lazy-loaded payloads.

    Missing optional files leave the corresponding path as None and mark
    the handle partial.
    """

    scene_id: str
    graph_path: Optional[Path]
    raster_path: Optional[Path]
    annotation_path: Optional[Path]

    @property
    def complete(self) -> bool:
        return None not in (self.graph_path, self.raster_path,
                            self.annotation_path)

    def graph(self) -> Optional[GraphData]:
        return load_graph(self.graph_path) if self.graph_path else None

    def raster(self) -> Optional[BevRaster]:
        return load_raster(self.raster_path) if self.raster_path else None

    def scenes(self) -> Optional[List[Scene]]:
        return (load_scenes(self.annotation_path)
                if self.annotation_path else None)


def iter_scenes(root_dir: Union[str, Path]) -> Iterator[SceneHandle]:
    """Yield SceneHandles for each scene subdirectory, in lexicographic
    order. A scene directory may contain graph.sdg.json, bev.f32, and
    annotations.olann.json; absent files yield None fields."""
    root = Path(root_dir)
    if not root.is_dir():
        raise NotADirectory(f"{root} is not a directory")
    for entry in sorted(p for p in root.iterdir() if p.is_dir()):
        def _opt(name):
            candidate = entry / name
            return candidate if candidate.is_file() else None

        yield SceneHandle(
            scene_id=entry.name,
            graph_path=_opt(GRAPH_FILENAME),
            raster_path=_opt(RASTER_FILENAME),
            annotation_path=_opt(ANNOTATION_FILENAME))
