"""OSM XML ingestion and ego-centric SD graph construction.

Parses the OSM v0.6 XML subset (node, way, nd, tag), filters ways down to
the 25 supported highway classes, projects nodes into an ego-centric
Cartesian frame, and resamples edges to a fixed waypoint density.
"""
from __future__ import annotations

import enum
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

import numpy as np

from . import geo
from .errors import InvalidDensity, MalformedXml


class HighwayClass(enum.Enum):
    CROSSING = "crossing"
    LIVING_STREET = "living_street"
    MINI_ROUNDABOUT = "mini_roundabout"
    MOTORWAY = "motorway"
    MOTORWAY_JUNCTION = "motorway_junction"
    MOTORWAY_LINK = "motorway_link"
    PATH = "path"
    PRIMARY = "primary"
    PRIMARY_LINK = "primary_link"
    RESIDENTIAL = "residential"
    ROAD = "road"
    SECONDARY = "secondary"
    SECONDARY_LINK = "secondary_link"
    SERVICE = "service"
    SERVICES = "services"
    STOP = "stop"
    TERTIARY = "tertiary"
    TERTIARY_LINK = "tertiary_link"
    TRAFFIC_SIGN = "traffic_sign"
    TRAFFIC_SIGNALS = "traffic_signals"
    TRUNK = "trunk"
    TRUNK_LINK = "trunk_link"
    TURNING_CIRCLE = "turning_circle"
    TURNING_LOOP = "turning_loop"
    UNCLASSIFIED = "unclassified"

    @classmethod
    def parse(cls, value: str) -> Optional["HighwayClass"]:
        """Map a raw highway tag value to a class; unknown values give None."""
        try:
            return cls(value)
        except ValueError:
            return None


# Classes that appear as node-level annotations rather than way geometry.
POINT_CLASSES = frozenset({
    HighwayClass.CROSSING,
    HighwayClass.MINI_ROUNDABOUT,
    HighwayClass.MOTORWAY_JUNCTION,
    HighwayClass.STOP,
    HighwayClass.TRAFFIC_SIGN,
    HighwayClass.TRAFFIC_SIGNALS,
    HighwayClass.TURNING_CIRCLE,
    HighwayClass.TURNING_LOOP,
})


@dataclass(frozen=True)
class OsmNode:
    id: int
    location: geo.GeoPoint
    tags: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OsmWay:
    id: int
    node_refs: tuple
    tags: dict = field(default_factory=dict)


@dataclass
class ParseResult:
    nodes: list
    ways: list
    diagnostics: list   # human-readable strings, e.g. dangling-ref reports

    @property
    def node_store(self) -> dict:
        return {n.id: n for n in self.nodes}


def parse_osm_xml(document: Union[bytes, str, IO]) -> ParseResult:
    """Parse an OSM XML document into nodes and ways.

    Ways referencing missing nodes are dropped and reported as diagnostics.
    Element order is preserved.
    """
    if isinstance(document, str):
        document = document.encode()
    try:
        if isinstance(document, bytes):
            root = ET.fromstring(document)
        else:
            root = ET.parse(document).getroot()
    except ET.ParseError as exc:
        raise MalformedXml(f"XML parse error at line {exc.position[0]}, "
                           f"column {exc.position[1]}: {exc}") from exc

    nodes: list[OsmNode] = []
    raw_ways: list[OsmWay] = []
    for child in root:
        if child.tag == "node":
            tags = {t.attrib["k"]: t.attrib["v"]
                    for t in child if t.tag == "tag"}
            nodes.append(OsmNode(
                id=int(child.attrib["id"]),
                location=geo.GeoPoint(float(child.attrib["lat"]),
                                      float(child.attrib["lon"])),
                tags=tags,
            ))
        elif child.tag == "way":
            refs = []
            tags = {}
            for mem in child:
                if mem.tag == "nd":
                    refs.append(int(mem.attrib["ref"]))
                elif mem.tag == "tag":
                    tags[mem.attrib["k"]] = mem.attrib["v"]
            raw_ways.append(OsmWay(id=int(child.attrib["id"]),
                                   node_refs=tuple(refs), tags=tags))

    known = {n.id for n in nodes}
    ways: list[OsmWay] = []
    diagnostics: list[str] = []
    for way in raw_ways:
        missing = [r for r in way.node_refs if r not in known]
        if missing:
            diagnostics.append(
                f"DanglingNodeRef: way {way.id} references missing "
                f"node(s) {missing}; way dropped")
        else:
            ways.append(way)
    return ParseResult(nodes=nodes, ways=ways, diagnostics=diagnostics)


def filter_highways(ways: Iterable[OsmWay]) -> list[tuple[OsmWay, HighwayClass]]:
    """Keep only ways whose highway tag parses to a supported class."""
    kept = []
    for way in ways:
        value = way.tags.get("highway")
        if value is None:
            continue
        cls = HighwayClass.parse(value)
        if cls is not None:
            kept.append((way, cls))
    return kept


@dataclass(frozen=True)
class GraphNode:
    x: float
    y: float
    cls: Optional[HighwayClass]
    source_way_id: Optional[int] = None


@dataclass(frozen=True)
class GraphEdge:
    a: int
    b: int
    cls: Optional[HighwayClass] = None
    source_way_id: Optional[int] = None


@dataclass
class SdMapGraph:
    """Ego-centric SD map graph: positioned nodes plus undirected edges."""
    nodes: list
    edges: list

    def __post_init__(self):
        for e in self.edges:
            if e.a == e.b:
                raise ValueError(f"self-loop edge at node {e.a}")

    @property
    def positions(self) -> np.ndarray:
        return np.array([[n.x, n.y] for n in self.nodes],
                        dtype=float).reshape(len(self.nodes), 2)

    def adjacency(self) -> np.ndarray:
        """Symmetric boolean adjacency matrix."""
        n = len(self.nodes)
        adj = np.zeros((n, n), dtype=bool)
        for e in self.edges:
            adj[e.a, e.b] = True
            adj[e.b, e.a] = True
        return adj

    def num_components(self) -> int:
        n = len(self.nodes)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for e in self.edges:
            ra, rb = find(e.a), find(e.b)
            if ra != rb:
                parent[ra] = rb
        return len({find(i) for i in range(n)})

    def arc_length(self) -> float:
        total = 0.0
        for e in self.edges:
            na, nb = self.nodes[e.a], self.nodes[e.b]
            total += math.hypot(nb.x - na.x, nb.y - na.y)
        return total


def _clip_segment(p1, p2, region: geo.BoundingRegion):
    """Liang-Barsky clip of segment p1->p2 against the region.

    Returns (t0, t1) parameter interval inside the region, or None if the
    segment is fully outside.
    """
    x0, y0 = p1
    dx = p2[0] - x0
    dy = p2[1] - y0
    t0, t1 = 0.0, 1.0
    checks = (
        (-dx, x0 - region.min_corner[0]),
        (dx, region.max_corner[0] - x0),
        (-dy, y0 - region.min_corner[1]),
        (dy, region.max_corner[1] - y0),
    )
    for p, q in checks:
        if p == 0.0:
            if q < 0.0:
                return None
        else:
            r = q / p
            if p < 0.0:
                if r > t1:
                    return None
                t0 = max(t0, r)
            else:
                if r < t0:
                    return None
                t1 = min(t1, r)
    if t0 > t1:
        return None
    return (t0, t1)


def build_graph(filtered_ways: Iterable[tuple[OsmWay, HighwayClass]],
                node_store: dict,
                origin: geo.GeoPoint,
                ego: geo.EgoPose,
                region: Optional[geo.BoundingRegion] = None,
                annotation_nodes: Iterable[OsmNode] = ()) -> SdMapGraph:
    """Assemble an ego-centric graph from filtered ways.

    Node positions are projected from WGS84 at `origin` and transformed into
    the ego frame of `ego`. If `region` is given (in the shared projected
    frame), way geometry is clipped to it with interpolated boundary nodes.
    Point-class annotation nodes are carried as zero-degree nodes.
    """
    nodes: list[GraphNode] = []
    edges: list[GraphEdge] = []
    index_of: dict[int, int] = {}   # OSM node id -> graph index

    def world_pos(osm_node: OsmNode) -> tuple[float, float]:
        return geo.project_wgs84(origin, osm_node.location)

    def add_node(osm_id, wx, wy, cls, way_id) -> int:
        if osm_id is not None and osm_id in index_of:
            return index_of[osm_id]
        ex, ey = geo.to_ego_frame(ego, (wx, wy))
        nodes.append(GraphNode(ex, ey, cls, way_id))
        idx = len(nodes) - 1
        if osm_id is not None:
            index_of[osm_id] = idx
        return idx

    for way, cls in filtered_ways:
        refs = way.node_refs
        world = [world_pos(node_store[r]) for r in refs]
        for i in range(len(refs) - 1):
            p1, p2 = world[i], world[i + 1]
            if region is None:
                span = (0.0, 1.0)
            else:
                span = _clip_segment(p1, p2, region)
                if span is None:
                    continue
            t0, t1 = span
            if t0 == 0.0:
                ia = add_node(refs[i], p1[0], p1[1], cls, way.id)
            else:
                cx = p1[0] + t0 * (p2[0] - p1[0])
                cy = p1[1] + t0 * (p2[1] - p1[1])
                ia = add_node(None, cx, cy, cls, way.id)
            if t1 == 1.0:
                ib = add_node(refs[i + 1], p2[0], p2[1], cls, way.id)
            else:
                cx = p1[0] + t1 * (p2[0] - p1[0])
                cy = p1[1] + t1 * (p2[1] - p1[1])
                ib = add_node(None, cx, cy, cls, way.id)
            if ia != ib:
                edges.append(GraphEdge(ia, ib, cls, way.id))

    for osm_node in annotation_nodes:
        cls = HighwayClass.parse(osm_node.tags.get("highway", ""))
        if cls is None:
            continue
        wx, wy = world_pos(osm_node)
        if region is not None and not region.contains(wx, wy):
            continue
        if osm_node.id not in index_of:
            add_node(osm_node.id, wx, wy, cls, None)

    return SdMapGraph(nodes=nodes, edges=edges)


def resample_graph(graph: SdMapGraph, density: float) -> SdMapGraph:
    """Subdivide every edge so consecutive waypoints are <= `density` apart.

    Each edge of length L is split into ceil(L / density) equal segments;
    inserted nodes inherit the edge's class. Original nodes and topology are
    preserved.
    """
    if not (density > 0 and math.isfinite(density)):
        raise InvalidDensity(f"density must be positive, got {density}")
    nodes = list(graph.nodes)
    edges: list[GraphEdge] = []
    for e in graph.edges:
        na, nb = graph.nodes[e.a], graph.nodes[e.b]
        length = math.hypot(nb.x - na.x, nb.y - na.y)
        # tolerance keeps resampling idempotent under float rounding
        n_seg = max(1, math.ceil(length / density - 1e-12))
        prev = e.a
        for k in range(1, n_seg):
            t = k / n_seg
            nodes.append(GraphNode(na.x + t * (nb.x - na.x),
                                   na.y + t * (nb.y - na.y),
                                   e.cls, e.source_way_id))
            idx = len(nodes) - 1
            edges.append(GraphEdge(prev, idx, e.cls, e.source_way_id))
            prev = idx
        edges.append(GraphEdge(prev, e.b, e.cls, e.source_way_id))
    return SdMapGraph(nodes=nodes, edges=edges)
