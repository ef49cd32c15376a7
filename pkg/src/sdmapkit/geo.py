"""WGS84 to local Cartesian projection and ego-frame transforms.

The projection is a local tangent plane anchored at an origin coordinate:
latitude offsets are scaled by the meridian radius of curvature, longitude
offsets by the prime-vertical radius times cos(lat). Valid for scene-scale
extents (well under 100 km), where the approximation error is negligible.

Conventions fixed here and relied on downstream:
  - x = east / ego-forward, y = north / ego-left
  - heading in radians, counter-clockwise from +x, normalized to [-pi, pi)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EmptyInput, InvalidCoordinate

# WGS84 ellipsoid
_A = 6378137.0               # semi-major axis (m)
_E2 = 6.69437999014e-3       # first eccentricity squared

MAX_PROJECTION_RANGE_M = 100_000.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def validate(self) -> "GeoPoint":
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise InvalidCoordinate(f"latitude out of range: {self.lat}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise InvalidCoordinate(f"longitude out of range: {self.lon}")
        return self


def normalize_heading(theta: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped >= math.pi:
        wrapped -= 2.0 * math.pi
    elif wrapped < -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class EgoPose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)
                and math.isfinite(self.heading)):
            raise InvalidCoordinate("non-finite ego pose")
        object.__setattr__(self, "heading", normalize_heading(self.heading))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class BoundingRegion:
    min_corner: tuple[float, float]
    max_corner: tuple[float, float]

    def __post_init__(self):
        if not (self.max_corner[0] > self.min_corner[0]
                and self.max_corner[1] > self.min_corner[1]):
            raise InvalidCoordinate("degenerate bounding region")

    def contains(self, x: float, y: float) -> bool:
        return (self.min_corner[0] <= x <= self.max_corner[0]
                and self.min_corner[1] <= y <= self.max_corner[1])


def _curvature_radii(lat_rad: float) -> tuple[float, float]:
    """Meridian (M) and prime-vertical (N) radii of curvature, meters."""
    s = math.sin(lat_rad)
    denom = math.sqrt(1.0 - _E2 * s * s)
    n = _A / denom
    m = _A * (1.0 - _E2) / (denom ** 3)
    return m, n


def project_wgs84(origin: GeoPoint, point: GeoPoint) -> tuple[float, float]:
    """Project `point` onto the local tangent plane at `origin`.

    Returns (x, y) = (east, north) offsets in meters. Exact at the origin.
    """
    origin.validate()
    point.validate()
    lat0 = math.radians(origin.lat)
    m, n = _curvature_radii(lat0)
    x = math.radians(point.lon - origin.lon) * n * math.cos(lat0)
    y = math.radians(point.lat - origin.lat) * m
    return (x, y)


def bounding_region(poses: list[EgoPose], margin: float = 200.0) -> BoundingRegion:
    """Axis-aligned box over the pose positions, expanded by `margin` per side."""
    if not poses:
        raise EmptyInput("no poses given")
    if margin < 0:
        raise InvalidCoordinate(f"negative margin: {margin}")
    xs = [p.x for p in poses]
    ys = [p.y for p in poses]
    return BoundingRegion(
        (min(xs) - margin, min(ys) - margin),
        (max(xs) + margin, max(ys) + margin),
    )


def to_ego_frame(pose: EgoPose, point: tuple[float, float]) -> tuple[float, float]:
    """World point -> ego frame: translate by -position, rotate by -heading."""
    dx = point[0] - pose.x
    dy = point[1] - pose.y
    c = math.cos(pose.heading)
    s = math.sin(pose.heading)
    return (c * dx + s * dy, -s * dx + c * dy)


def from_ego_frame(pose: EgoPose, point: tuple[float, float]) -> tuple[float, float]:
    """Inverse of :func:`to_ego_frame`."""
    c = math.cos(pose.heading)
    s = math.sin(pose.heading)
    return (c * point[0] - s * point[1] + pose.x,
            s * point[0] + c * point[1] + pose.y)
