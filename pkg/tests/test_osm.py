import math

import numpy as np
import pytest

from helpers import make_path_graph
from sdmapkit import geo, osm
from sdmapkit.errors import InvalidDensity, MalformedXml
from sdmapkit.osm import GraphEdge, GraphNode, HighwayClass, SdMapGraph

ORIGIN = geo.GeoPoint(37.0, -122.0)
EGO = geo.EgoPose(0.0, 0.0, 0.0)


class TestParse:
    def test_minimal_document(self):
        doc = """<osm>
          <node id="1" lat="37.0" lon="-122.0"/>
          <node id="2" lat="37.001" lon="-122.0"/>
          <way id="9"><nd ref="1"/><nd ref="2"/></way>
        </osm>"""
        result = osm.parse_osm_xml(doc)
        assert len(result.nodes) == 2
        assert len(result.ways) == 1
        assert result.ways[0].node_refs == (1, 2)
        assert result.diagnostics == []

    def test_dangling_ref_drops_way(self):
        doc = """<osm>
          <node id="1" lat="37.0" lon="-122.0"/>
          <way id="9"><nd ref="1"/><nd ref="999"/></way>
        </osm>"""
        result = osm.parse_osm_xml(doc)
        assert result.ways == []
        assert len(result.diagnostics) == 1
        assert "999" in result.diagnostics[0]

    def test_malformed_xml_reports_position(self):
        with pytest.raises(MalformedXml, match="line"):
            osm.parse_osm_xml("<osm><node id='1'")

    def test_mixed_fixture_structure(self, tiny_osm_xml):
        # hand-written fixture, structure frozen after one review
        result = osm.parse_osm_xml(tiny_osm_xml)
        assert [n.id for n in result.nodes] == [1, 2, 3, 4, 5, 6]
        assert [w.id for w in result.ways] == [100, 101, 102]
        assert result.nodes[3].tags == {"highway": "traffic_signals"}
        assert result.ways[0].tags == {"highway": "residential"}
        assert result.ways[1].node_refs == (2, 5, 6)

    def test_deterministic(self, tiny_osm_xml):
        r1 = osm.parse_osm_xml(tiny_osm_xml)
        r2 = osm.parse_osm_xml(tiny_osm_xml)
        assert r1.nodes == r2.nodes
        assert r1.ways == r2.ways


class TestFilterHighways:
    def test_residential_kept_footway_dropped(self):
        ways = [osm.OsmWay(1, (1, 2), {"highway": "residential"}),
                osm.OsmWay(2, (1, 2), {"highway": "footway"})]
        kept = osm.filter_highways(ways)
        assert len(kept) == 1
        assert kept[0][1] is HighwayClass.RESIDENTIAL

    def test_empty_input(self):
        assert osm.filter_highways([]) == []

    def test_no_highway_tag(self):
        ways = [osm.OsmWay(1, (1, 2), {"building": "yes"})]
        assert osm.filter_highways(ways) == []

    def test_class_table_is_closed(self):
        assert len(HighwayClass) == 25
        assert HighwayClass.parse("motorway") is HighwayClass.MOTORWAY
        assert HighwayClass.parse("footway") is None
        assert HighwayClass.parse("") is None


class TestBuildGraph:
    def _graph(self, doc):
        result = osm.parse_osm_xml(doc)
        kept = osm.filter_highways(result.ways)
        return osm.build_graph(kept, result.node_store, ORIGIN, EGO)

    def test_path_graph(self):
        doc = """<osm>
          <node id="1" lat="37.0" lon="-122.0"/>
          <node id="2" lat="37.0005" lon="-122.0"/>
          <node id="3" lat="37.001" lon="-122.0"/>
          <way id="9"><tag k="highway" v="primary"/>
            <nd ref="1"/><nd ref="2"/><nd ref="3"/></way>
        </osm>"""
        g = self._graph(doc)
        assert len(g.nodes) == 3
        assert len(g.edges) == 2
        degrees = g.adjacency().sum(axis=0).tolist()
        assert sorted(degrees) == [1, 1, 2]

    def test_shared_node_becomes_junction(self, tiny_osm_xml):
        result = osm.parse_osm_xml(tiny_osm_xml)
        kept = osm.filter_highways(result.ways)
        g = osm.build_graph(kept, result.node_store, ORIGIN, EGO)
        degrees = g.adjacency().sum(axis=0)
        assert degrees.max() >= 3   # node 2 is shared by ways 100 and 101

    def test_t_intersection_adjacency(self):
        # T shape: way A is 1-2-3, way B is 2-4
        doc = """<osm>
          <node id="1" lat="37.0" lon="-122.001"/>
          <node id="2" lat="37.0" lon="-122.0"/>
          <node id="3" lat="37.0" lon="-121.999"/>
          <node id="4" lat="37.001" lon="-122.0"/>
          <way id="10"><tag k="highway" v="primary"/>
            <nd ref="1"/><nd ref="2"/><nd ref="3"/></way>
          <way id="11"><tag k="highway" v="service"/>
            <nd ref="2"/><nd ref="4"/></way>
        </osm>"""
        g = self._graph(doc)
        # hand-enumerated adjacency for node order 1,2,3,4
        expected = np.array([
            [0, 1, 0, 0],
            [1, 0, 1, 1],
            [0, 1, 0, 0],
            [0, 1, 0, 0],
        ], dtype=bool)
        assert np.array_equal(g.adjacency(), expected)

    def test_ego_frame_positions(self):
        doc = """<osm>
          <node id="1" lat="37.0" lon="-122.0"/>
          <node id="2" lat="37.001" lon="-122.0"/>
          <way id="9"><tag k="highway" v="primary"/>
            <nd ref="1"/><nd ref="2"/></way>
        </osm>"""
        result = osm.parse_osm_xml(doc)
        kept = osm.filter_highways(result.ways)
        # ego facing north (heading pi/2): north offsets become +x forward
        ego = geo.EgoPose(0.0, 0.0, math.pi / 2)
        g = osm.build_graph(kept, result.node_store, ORIGIN, ego)
        assert g.nodes[0].x == pytest.approx(0.0, abs=1e-9)
        assert g.nodes[1].x == pytest.approx(110.98, abs=0.01)
        assert g.nodes[1].y == pytest.approx(0.0, abs=1e-6)

    def test_clipping_inserts_boundary_node(self):
        doc = """<osm>
          <node id="1" lat="37.0" lon="-122.0"/>
          <node id="2" lat="37.01" lon="-122.0"/>
          <way id="9"><tag k="highway" v="primary"/>
            <nd ref="1"/><nd ref="2"/></way>
        </osm>"""
        result = osm.parse_osm_xml(doc)
        kept = osm.filter_highways(result.ways)
        region = geo.BoundingRegion((-200.0, -200.0), (200.0, 200.0))
        g = osm.build_graph(kept, result.node_store, ORIGIN, EGO, region)
        # node 2 is ~1110 m north, outside the 200 m region
        assert len(g.nodes) == 2
        assert max(n.y for n in g.nodes) == pytest.approx(200.0, abs=1e-6)

    def test_annotation_nodes_are_zero_degree(self, tiny_osm_xml):
        result = osm.parse_osm_xml(tiny_osm_xml)
        kept = osm.filter_highways(result.ways)
        g = osm.build_graph(kept, result.node_store, ORIGIN, EGO,
                            annotation_nodes=result.nodes)
        signals = [i for i, n in enumerate(g.nodes)
                   if n.cls is HighwayClass.TRAFFIC_SIGNALS]
        assert len(signals) == 1
        assert g.adjacency()[signals[0]].sum() == 0


class TestResample:
    def test_three_meter_edge_density_one(self):
        g = make_path_graph([(0, 0), (3, 0)])
        r = osm.resample_graph(g, 1.0)
        assert len(r.nodes) == 4
        xs = sorted(n.x for n in r.nodes)
        assert xs == pytest.approx([0.0, 1.0, 2.0, 3.0])

    def test_short_edge_unchanged(self):
        g = make_path_graph([(0, 0), (0.5, 0)])
        r = osm.resample_graph(g, 1.0)
        assert len(r.nodes) == 2
        assert len(r.edges) == 1

    def test_fractional_edge_equal_subdivision(self):
        g = make_path_graph([(0, 0), (2.5, 0)])
        r = osm.resample_graph(g, 1.0)
        assert len(r.nodes) == 4
        xs = sorted(n.x for n in r.nodes)
        assert xs == pytest.approx([0.0, 2.5 / 3, 5.0 / 3, 2.5])

    def test_inserted_nodes_inherit_class(self):
        g = make_path_graph([(0, 0), (3, 0)], HighwayClass.MOTORWAY)
        r = osm.resample_graph(g, 1.0)
        assert all(n.cls is HighwayClass.MOTORWAY for n in r.nodes)

    def test_invalid_density(self):
        g = make_path_graph([(0, 0), (1, 0)])
        with pytest.raises(InvalidDensity):
            osm.resample_graph(g, 0.0)
        with pytest.raises(InvalidDensity):
            osm.resample_graph(g, -1.0)

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        from helpers import random_graph
        for _ in range(20):
            g = random_graph(rng)
            r1 = osm.resample_graph(g, 1.0)
            r2 = osm.resample_graph(r1, 1.0)
            assert len(r2.nodes) == len(r1.nodes)
            assert np.allclose(r2.positions, r1.positions, atol=1e-9)

    def test_arc_length_and_components_preserved(self):
        rng = np.random.default_rng(11)
        from helpers import random_graph
        for _ in range(20):
            g = random_graph(rng)
            r = osm.resample_graph(g, 1.0)
            assert r.arc_length() == pytest.approx(g.arc_length(), rel=1e-9)
            assert r.num_components() == g.num_components()

    def test_max_spacing_bounded(self):
        rng = np.random.default_rng(13)
        from helpers import random_graph
        for _ in range(20):
            g = random_graph(rng)
            r = osm.resample_graph(g, 1.0)
            for e in r.edges:
                na, nb = r.nodes[e.a], r.nodes[e.b]
                assert math.hypot(nb.x - na.x, nb.y - na.y) <= 1.0 + 1e-9

    def test_junction_degrees_preserved(self):
        nodes = [GraphNode(0, 0, HighwayClass.PRIMARY),
                 GraphNode(5, 0, HighwayClass.PRIMARY),
                 GraphNode(5, 5, HighwayClass.PRIMARY),
                 GraphNode(5, -5, HighwayClass.PRIMARY)]
        edges = [GraphEdge(0, 1, HighwayClass.PRIMARY),
                 GraphEdge(1, 2, HighwayClass.PRIMARY),
                 GraphEdge(1, 3, HighwayClass.PRIMARY)]
        g = SdMapGraph(nodes=nodes, edges=edges)
        r = osm.resample_graph(g, 1.0)
        adj = r.adjacency()
        # original junction (index 1) keeps degree 3
        assert adj[1].sum() == 3


class TestSdMapGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            SdMapGraph(nodes=[GraphNode(0, 0, None)],
                       edges=[GraphEdge(0, 0)])

    def test_adjacency_symmetric(self):
        g = make_path_graph([(0, 0), (1, 0), (2, 0)])
        adj = g.adjacency()
        assert np.array_equal(adj, adj.T)
