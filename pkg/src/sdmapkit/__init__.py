"""SD map toolkit: OSM ingestion, ego-centric BEV rasterization, graph
fusion numerics, and the online-mapping evaluation suite."""

from . import encoder, formats, geo, grid, metrics, osm, raster  # noqa: F401

__version__ = "0.1.0"
