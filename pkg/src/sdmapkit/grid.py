"""BEV grid alignment, node feature augmentation, and localization noise.

Grid alignment follows the convention: row index = floor(x * cells_per_m)
+ H_B/2, column index = floor(y * cells_per_m) + W_B/2, with x bound to the
forward/row axis throughout the toolkit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .osm import GraphNode, HighwayClass, SdMapGraph
from .raster import BevSpec

_CLASS_ORDER = list(HighwayClass)
NUM_CLASSES = len(_CLASS_ORDER)
_CLASS_INDEX = {cls: i for i, cls in enumerate(_CLASS_ORDER)}


@dataclass(frozen=True)
class GridIndex:
    x_b: int
    y_b: int
    in_range: bool


@dataclass
class AugmentedNodeFeature:
    base: np.ndarray        # (2 + NUM_CLASSES,) position + class one-hot
    bev_slice: np.ndarray   # (C_B,)
    combined: np.ndarray    # concat(base, bev_slice)


@dataclass(frozen=True)
class NoiseSpec:
    translation: float = 0.0     # meters
    rotation: float = 0.0        # degrees
    seed: int = 0

    def __post_init__(self):
        if self.translation < 0 or self.rotation < 0:
            raise DimensionMismatch("noise magnitudes must be >= 0")


def align_to_grid(position, spec: BevSpec) -> GridIndex:
    """Map an ego-frame position to its BEV cell; out-of-range is flagged."""
    x, y = float(position[0]), float(position[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DimensionMismatch(f"non-finite position ({x}, {y})")
    cpm = spec.cells_per_meter
    x_b = int(math.floor(x * cpm)) + spec.h_cells // 2
    y_b = int(math.floor(y * cpm)) + spec.w_cells // 2
    in_range = 0 <= x_b < spec.h_cells and 0 <= y_b < spec.w_cells
    return GridIndex(x_b, y_b, in_range)


def node_base_feature(node: GraphNode) -> np.ndarray:
    """Position followed by a class one-hot (all-zero for untyped nodes)."""
    vec = np.zeros(2 + NUM_CLASSES, dtype=float)
    vec[0] = node.x
    vec[1] = node.y
    if node.cls is not None:
        vec[2 + _CLASS_INDEX[node.cls]] = 1.0
    return vec


def augment_nodes(graph: SdMapGraph, bev: np.ndarray,
                  spec: BevSpec) -> list[AugmentedNodeFeature]:
    """Concatenate each node's base feature with its BEV cell feature.

    Out-of-range nodes receive a zero BEV slice so graph topology survives.
    """
    bev = np.asarray(bev, dtype=float)
    if bev.ndim != 3 or bev.shape[:2] != (spec.h_cells, spec.w_cells):
        raise DimensionMismatch(
            f"BEV shape {bev.shape} does not match spec grid "
            f"({spec.h_cells}, {spec.w_cells})")
    c_b = bev.shape[2]
    out = []
    for node in graph.nodes:
        base = node_base_feature(node)
        idx = align_to_grid((node.x, node.y), spec)
        if idx.in_range:
            bev_slice = bev[idx.x_b, idx.y_b].copy()
        else:
            bev_slice = np.zeros(c_b, dtype=float)
        out.append(AugmentedNodeFeature(
            base=base, bev_slice=bev_slice,
            combined=np.concatenate([base, bev_slice])))
    return out


def perturb(graph: SdMapGraph, noise: NoiseSpec) -> SdMapGraph:
    """Apply one rigid transform to all node positions (localization error).

    The translation direction and the rotation sign are drawn from a Philox
    counter-based generator seeded with `noise.seed`; magnitudes are exact.
    Topology, classes, and pairwise distances are unchanged.
    """
    rng = np.random.Generator(np.random.Philox(noise.seed))
    angle = rng.uniform(0.0, 2.0 * math.pi)
    tx = noise.translation * math.cos(angle)
    ty = noise.translation * math.sin(angle)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    theta = sign * math.radians(noise.rotation)
    c, s = math.cos(theta), math.sin(theta)
    nodes = [
        GraphNode(c * n.x - s * n.y + tx,
                  s * n.x + c * n.y + ty,
                  n.cls, n.source_way_id)
        for n in graph.nodes
    ]
    return SdMapGraph(nodes=nodes, edges=list(graph.edges))
