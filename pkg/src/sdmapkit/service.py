"""FastAPI service exposing the toolkit over HTTP.

Request/response bodies mirror the documented file formats: graphs follow
the sdg-json record fields, scenes follow olann-json. Rasters are returned
as base64 PNG plus grid metadata.
"""
from __future__ import annotations

import base64
from typing import List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import geo, grid, metrics, raster
from .errors import SdMapKitError
from .osm import GraphEdge, GraphNode, HighwayClass, SdMapGraph

app = FastAPI(title="sdmapkit", version="0.1.0")


# ---------------------------------------------------------------------------
# models

class GeoPointModel(BaseModel):
    lat: float
    lon: float


class ProjectRequest(BaseModel):
    origin: GeoPointModel
    points: List[GeoPointModel]


class CartesianPointModel(BaseModel):
    x: float
    y: float


class ProjectResponse(BaseModel):
    points: List[CartesianPointModel]


class NodeModel(BaseModel):
    x: float
    y: float
    cls: Optional[str] = Field(default=None, alias="class")

    model_config = {"populate_by_name": True}


class EdgeModel(BaseModel):
    a: int
    b: int


class GraphModel(BaseModel):
    nodes: List[NodeModel]
    edges: List[EdgeModel]


class BevSpecModel(BaseModel):
    x_range: tuple[float, float] = (-50.0, 50.0)
    y_range: tuple[float, float] = (-25.0, 25.0)
    resolution: float = 0.5


class NoiseModel(BaseModel):
    translation: float = 0.0
    rotation: float = 0.0
    seed: int = 0


class PerturbRequest(BaseModel):
    graph: GraphModel
    noise: NoiseModel


class AlignRequest(BaseModel):
    positions: List[CartesianPointModel]
    spec: BevSpecModel = BevSpecModel()


class GridIndexModel(BaseModel):
    x_b: int
    y_b: int
    in_range: bool


class AlignResponse(BaseModel):
    indices: List[GridIndexModel]


class RasterizeRequest(BaseModel):
    graph: GraphModel
    spec: BevSpecModel = BevSpecModel()


class RasterizeResponse(BaseModel):
    h: int
    w: int
    channels: int
    lit_cells: int
    png_base64: str


class CenterlineModel(BaseModel):
    points: List[List[float]]
    score: Optional[float] = None
    label: Optional[str] = None


class TrafficElementModel(BaseModel):
    box: tuple[float, float, float, float]
    cls: str = Field(default="", alias="class")
    score: Optional[float] = None

    model_config = {"populate_by_name": True}


class SceneModel(BaseModel):
    centerlines: List[CenterlineModel] = []
    traffic_elements: List[TrafficElementModel] = []
    a_cc: Optional[List[List[float]]] = None
    a_ct: Optional[List[List[float]]] = None


class EvaluateRequest(BaseModel):
    pred_scenes: List[SceneModel]
    gt_scenes: List[SceneModel]
    task: str = "reasoning"
    ols_variant: str = "sqrt"


# ---------------------------------------------------------------------------
# converters

def _to_graph(model: GraphModel) -> SdMapGraph:
    nodes = [GraphNode(n.x, n.y,
                       HighwayClass.parse(n.cls) if n.cls else None)
             for n in model.nodes]
    edges = [GraphEdge(e.a, e.b, nodes[e.a].cls) for e in model.edges]
    return SdMapGraph(nodes=nodes, edges=edges)


def _from_graph(g: SdMapGraph) -> GraphModel:
    return GraphModel(
        nodes=[NodeModel(x=n.x, y=n.y,
                         cls=n.cls.value if n.cls else None)
               for n in g.nodes],
        edges=[EdgeModel(a=e.a, b=e.b) for e in g.edges])


def _to_scene(model: SceneModel) -> metrics.SceneAnnotation:
    return metrics.SceneAnnotation(
        centerlines=[metrics.Centerline(np.array(c.points), c.score, c.label)
                     for c in model.centerlines],
        traffic_elements=[metrics.TrafficElement(t.box, t.cls, t.score)
                          for t in model.traffic_elements],
        a_cc=np.array(model.a_cc) if model.a_cc is not None else None,
        a_ct=np.array(model.a_ct) if model.a_ct is not None else None)


def _to_spec(model: BevSpecModel) -> raster.BevSpec:
    return raster.BevSpec(x_range=model.x_range, y_range=model.y_range,
                          resolution=model.resolution)


# ---------------------------------------------------------------------------
# endpoints

@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/geo/project", response_model=ProjectResponse)
def project(req: ProjectRequest):
    try:
        origin = geo.GeoPoint(req.origin.lat, req.origin.lon)
        pts = [geo.project_wgs84(origin, geo.GeoPoint(p.lat, p.lon))
               for p in req.points]
    except SdMapKitError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return ProjectResponse(
        points=[CartesianPointModel(x=x, y=y) for x, y in pts])


@app.post("/graph/align", response_model=AlignResponse)
def align(req: AlignRequest):
    try:
        spec = _to_spec(req.spec)
        out = [grid.align_to_grid((p.x, p.y), spec) for p in req.positions]
    except SdMapKitError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return AlignResponse(indices=[
        GridIndexModel(x_b=i.x_b, y_b=i.y_b, in_range=i.in_range)
        for i in out])


@app.post("/graph/perturb", response_model=GraphModel)
def perturb(req: PerturbRequest):
    try:
        g = _to_graph(req.graph)
        noise = grid.NoiseSpec(translation=req.noise.translation,
                               rotation=req.noise.rotation,
                               seed=req.noise.seed)
        return _from_graph(grid.perturb(g, noise))
    except (SdMapKitError, ValueError, IndexError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/rasterize", response_model=RasterizeResponse)
def rasterize_graph(req: RasterizeRequest):
    try:
        g = _to_graph(req.graph)
        canvas = raster.rasterize(g, _to_spec(req.spec))
        png = raster.canvas_to_png(canvas)
    except (SdMapKitError, ValueError, IndexError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return RasterizeResponse(
        h=canvas.data.shape[0], w=canvas.data.shape[1],
        channels=canvas.channels,
        lit_cells=int((canvas.data > 0).sum()),
        png_base64=base64.b64encode(png).decode())


@app.post("/evaluate")
def evaluate(req: EvaluateRequest):
    try:
        report = metrics.evaluate_scenes(
            [_to_scene(s) for s in req.pred_scenes],
            [_to_scene(s) for s in req.gt_scenes],
            task=req.task, ols_variant=req.ols_variant)
    except (SdMapKitError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return report.to_dict()
