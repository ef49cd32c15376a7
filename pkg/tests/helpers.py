from sdmapkit import metrics
from sdmapkit.osm import GraphEdge, GraphNode, HighwayClass, SdMapGraph

TINY_OSM_XML = """<?xml version="1.0" encoding="UTF-8"?>
<osm version="0.6">
  <node id="1" lat="37.0000" lon="-122.0000"/>
  <node id="2" lat="37.0005" lon="-122.0000"/>
  <node id="3" lat="37.0010" lon="-122.0000"/>
  <node id="4" lat="37.0005" lon="-122.0005">
    <tag k="highway" v="traffic_signals"/>
  </node>
  <node id="5" lat="37.0005" lon="-121.9995"/>
  <node id="6" lat="37.0000" lon="-121.9990"/>
  <way id="100">
    <tag k="highway" v="residential"/>
    <nd ref="1"/>
    <nd ref="2"/>
    <nd ref="3"/>
  </way>
  <way id="101">
    <tag k="highway" v="secondary"/>
    <nd ref="2"/>
    <nd ref="5"/>
    <nd ref="6"/>
  </way>
  <way id="102">
    <tag k="building" v="yes"/>
    <nd ref="1"/>
    <nd ref="6"/>
  </way>
</osm>
"""


def make_path_graph(points, cls=HighwayClass.RESIDENTIAL):
    nodes = [GraphNode(float(x), float(y), cls) for x, y in points]
    edges = [GraphEdge(i, i + 1, cls) for i in range(len(points) - 1)]
    return SdMapGraph(nodes=nodes, edges=edges)


def random_graph(rng, n_nodes=None):
    """Random connected-ish graph: a random tree plus a few extra edges."""
    n = n_nodes or rng.integers(2, 20)
    nodes = [GraphNode(float(x), float(y), HighwayClass.RESIDENTIAL)
             for x, y in rng.uniform(-40, 40, size=(n, 2))]
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append(GraphEdge(i, j, HighwayClass.RESIDENTIAL))
    for _ in range(int(rng.integers(0, 3))):
        a, b = rng.integers(0, n, size=2)
        if a != b and not any({e.a, e.b} == {a, b} for e in edges):
            edges.append(GraphEdge(int(a), int(b), HighwayClass.RESIDENTIAL))
    return SdMapGraph(nodes=nodes, edges=edges)


def random_polyline(rng, n_points=None, scale=10.0):
    n = n_points or int(rng.integers(2, 6))
    return rng.uniform(-scale, scale, size=(n, 2))


def random_scene(rng, max_centerlines=8, max_traffic=5):
    """Random annotated scene with scored centerlines and traffic elements."""
    m = int(rng.integers(1, max_centerlines + 1))
    k = int(rng.integers(0, max_traffic + 1))
    centerlines = [
        metrics.Centerline(points=random_polyline(rng, int(rng.integers(2, 6))),
                           score=float(rng.uniform(0.1, 1.0)))
        for _ in range(m)
    ]
    traffic = [
        metrics.TrafficElement(
            box=(float(rng.uniform(0, 100)), float(rng.uniform(0, 100)),
                 float(rng.uniform(5, 30)), float(rng.uniform(5, 30))),
            cls=str(rng.choice(["red", "green", "stop_sign"])),
            score=float(rng.uniform(0.1, 1.0)))
        for _ in range(k)
    ]
    return metrics.SceneAnnotation(
        centerlines=centerlines,
        traffic_elements=traffic,
        a_cc=rng.uniform(0, 1, size=(m, m)),
        a_ct=rng.uniform(0, 1, size=(m, k)))
