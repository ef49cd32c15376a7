"""Read-only loaders for SD-map toolkit artifacts.

Three formats are supported, parsed independently from their documented
byte/record layouts:

* ``sdg-json`` — line-delimited JSON graph (header, node, edge records)
* ``bev-f32`` — binary BEV raster with a fixed little-endian header
* ``olann-json`` — line-delimited JSON scene annotations

The package never writes files; ``to_records()`` converters exist so
round-trip equality can be checked in memory.
"""
from .errors import SchemaError
from .reader import (BevRaster, GraphData, Scene, SceneHandle, iter_scenes,
                     load_graph, load_raster, load_scenes)

__all__ = [
    "SchemaError",
    "GraphData",
    "BevRaster",
    "Scene",
    "SceneHandle",
    "load_graph",
    "load_raster",
    "load_scenes",
    "iter_scenes",
]

__version__ = "0.1.0"
