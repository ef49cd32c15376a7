"""BEV rasterization of SD map geometry onto fixed-extent canvases.

Strokes are rendered with a distance-to-segment test: a cell is lit when its
center lies within half the stroke width of the segment. This keeps strokes
rotation-symmetric and width-controllable.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, TooManyChannels
from .osm import HighwayClass, POINT_CLASSES, SdMapGraph


@dataclass(frozen=True)
class BevSpec:
    """Canvas geometry: metric extents and cell resolution.

    x is ego-forward (H_B rows), y is ego-lateral (W_B columns).
    """
    x_range: tuple[float, float] = (-50.0, 50.0)
    y_range: tuple[float, float] = (-25.0, 25.0)
    resolution: float = 0.5

    def __post_init__(self):
        if self.resolution <= 0:
            raise DimensionMismatch(f"resolution must be > 0, "
                                    f"got {self.resolution}")
        if (self.x_range[1] <= self.x_range[0]
                or self.y_range[1] <= self.y_range[0]):
            raise DimensionMismatch("degenerate canvas range")

    @property
    def h_cells(self) -> int:
        return int(round((self.x_range[1] - self.x_range[0]) / self.resolution))

    @property
    def w_cells(self) -> int:
        return int(round((self.y_range[1] - self.y_range[0]) / self.resolution))

    @property
    def cells_per_meter(self) -> float:
        return 1.0 / self.resolution


@dataclass
class BevCanvas:
    spec: BevSpec
    data: np.ndarray    # (H_B, W_B, C), values in [0, 1]

    def __post_init__(self):
        expect = (self.spec.h_cells, self.spec.w_cells)
        if self.data.ndim != 3 or self.data.shape[:2] != expect:
            raise DimensionMismatch(
                f"canvas shape {self.data.shape} does not match spec {expect}")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise DimensionMismatch("canvas values outside [0, 1]")

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def is_empty(self) -> bool:
        return not self.data.any()


@dataclass(frozen=True)
class PaletteEntry:
    channel: int
    width: float                      # stroke width, meters
    color: tuple[int, int, int]       # PNG export color

    def __post_init__(self):
        if self.width <= 0:
            raise DimensionMismatch(f"stroke width must be > 0, "
                                    f"got {self.width}")


@dataclass
class ClassPalette:
    entries: dict = field(default_factory=dict)   # HighwayClass -> PaletteEntry

    @property
    def num_channels(self) -> int:
        if not self.entries:
            return 1
        return max(e.channel for e in self.entries.values()) + 1

    def get(self, cls) -> Optional[PaletteEntry]:
        return self.entries.get(cls)

    def channel_colors(self) -> list[tuple[int, int, int]]:
        colors = [(255, 255, 255)] * self.num_channels
        for e in self.entries.values():
            colors[e.channel] = e.color
        return colors


# Channel grouping: major roads / minor roads and paths / point annotations.
_MAJOR = (HighwayClass.MOTORWAY, HighwayClass.MOTORWAY_LINK,
          HighwayClass.TRUNK, HighwayClass.TRUNK_LINK,
          HighwayClass.PRIMARY, HighwayClass.PRIMARY_LINK,
          HighwayClass.SECONDARY, HighwayClass.SECONDARY_LINK,
          HighwayClass.TERTIARY, HighwayClass.TERTIARY_LINK)


def default_palette() -> ClassPalette:
    entries = {}
    for cls in HighwayClass:
        if cls in POINT_CLASSES:
            entries[cls] = PaletteEntry(channel=2, width=1.0,
                                        color=(0, 128, 255))
        elif cls in _MAJOR:
            entries[cls] = PaletteEntry(channel=0, width=4.0,
                                        color=(255, 255, 255))
        else:
            entries[cls] = PaletteEntry(channel=1, width=2.5,
                                        color=(160, 160, 160))
    return ClassPalette(entries)


def palette_from_dict(spec: dict) -> ClassPalette:
    """Build a palette from a JSON-style dict:
    {"classes": {"residential": {"channel": 1, "width": 2.5,
                                 "color": [160, 160, 160]}, ...}}
    Unknown class names raise DimensionMismatch.
    """
    entries = {}
    for name, cfg in spec.get("classes", {}).items():
        cls = HighwayClass.parse(name)
        if cls is None:
            raise DimensionMismatch(f"unknown highway class {name!r}")
        entries[cls] = PaletteEntry(channel=int(cfg["channel"]),
                                    width=float(cfg["width"]),
                                    color=tuple(cfg.get("color",
                                                        (255, 255, 255))))
    return ClassPalette(entries)


def _segment_distance_grid(spec: BevSpec, p1, p2, half_width: float,
                           channel_plane: np.ndarray) -> None:
    """Light cells whose centers lie within half_width of segment p1->p2."""
    h, w = channel_plane.shape
    res = spec.resolution
    x0, y0 = spec.x_range[0], spec.y_range[0]
    lo_x = min(p1[0], p2[0]) - half_width
    hi_x = max(p1[0], p2[0]) + half_width
    lo_y = min(p1[1], p2[1]) - half_width
    hi_y = max(p1[1], p2[1]) + half_width
    i0 = max(0, int(math.floor((lo_x - x0) / res)))
    i1 = min(h - 1, int(math.floor((hi_x - x0) / res)))
    j0 = max(0, int(math.floor((lo_y - y0) / res)))
    j1 = min(w - 1, int(math.floor((hi_y - y0) / res)))
    if i0 > i1 or j0 > j1:
        return
    ii = np.arange(i0, i1 + 1)
    jj = np.arange(j0, j1 + 1)
    cx = x0 + (ii + 0.5) * res
    cy = y0 + (jj + 0.5) * res
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    ax, ay = p1
    dx, dy = p2[0] - ax, p2[1] - ay
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0.0:
        dist = np.hypot(gx - ax, gy - ay)
    else:
        t = np.clip(((gx - ax) * dx + (gy - ay) * dy) / seg_len2, 0.0, 1.0)
        dist = np.hypot(gx - (ax + t * dx), gy - (ay + t * dy))
    mask = dist <= half_width
    channel_plane[i0:i1 + 1, j0:j1 + 1][mask] = 1.0


def rasterize(source: Union[SdMapGraph, Iterable],
              spec: Optional[BevSpec] = None,
              palette: Optional[ClassPalette] = None) -> BevCanvas:
    """Render a graph or an iterable of (points, HighwayClass) polylines.

    Every segment intersecting the canvas is stroked in its class channel at
    its class width; out-of-canvas geometry is skipped. Deterministic.
    """
    spec = spec or BevSpec()
    palette = palette or default_palette()
    data = np.zeros((spec.h_cells, spec.w_cells, palette.num_channels),
                    dtype=np.float32)

    segments = []   # ((x1,y1), (x2,y2), entry)
    if isinstance(source, SdMapGraph):
        for e in source.edges:
            entry = palette.get(e.cls)
            if entry is None:
                continue
            na, nb = source.nodes[e.a], source.nodes[e.b]
            segments.append(((na.x, na.y), (nb.x, nb.y), entry))
        for node in source.nodes:
            # zero-degree annotation nodes render as dots
            if node.cls in POINT_CLASSES:
                entry = palette.get(node.cls)
                if entry is not None:
                    segments.append(((node.x, node.y), (node.x, node.y), entry))
    else:
        for points, cls in source:
            entry = palette.get(cls)
            if entry is None:
                continue
            pts = np.asarray(points, dtype=float)
            for k in range(len(pts) - 1):
                segments.append((tuple(pts[k]), tuple(pts[k + 1]), entry))

    for p1, p2, entry in segments:
        _segment_distance_grid(spec, p1, p2, entry.width / 2.0,
                               data[:, :, entry.channel])
    return BevCanvas(spec=spec, data=data)


def canvas_to_png(canvas: BevCanvas,
                  palette: Optional[ClassPalette] = None) -> bytes:
    """Encode a canvas as lossless PNG: ego at center, forward (+x) up.

    One channel exports as grayscale; up to four channels are blended with
    their palette colors into RGB.
    """
    c = canvas.channels
    if c > 4:
        raise TooManyChannels(f"{c} channels cannot map to RGBA")
    # image row 0 = max x (forward up); +y points left -> flip columns
    oriented = canvas.data[::-1, ::-1, :]
    if c == 1:
        arr = (oriented[:, :, 0] * 255.0).round().astype(np.uint8)
        img = Image.fromarray(arr, mode="L")
    else:
        colors = (palette or default_palette()).channel_colors()[:c]
        rgb = np.zeros(oriented.shape[:2] + (3,), dtype=np.float64)
        for ch in range(c):
            col = np.array(colors[ch] if ch < len(colors) else (255, 255, 255),
                           dtype=np.float64)
            rgb += oriented[:, :, ch:ch + 1] * col
        arr = np.clip(rgb, 0, 255).round().astype(np.uint8)
        img = Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
