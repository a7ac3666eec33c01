"""Workspace geometry and the geo <-> table projection.

Table coordinates are meters, origin at the south-west corner of the
tabletop, x east, y north.  The map is projected onto the table with a
local equirectangular projection about the viewport center: geo offsets
become ground meters, ground meters are divided by the viewport scale,
rotated, and translated so the viewport center lands on the table center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0

BACKDROP_EDGES = ("north", "south", "east", "west")


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Workspace:
    """Tabletop plane plus the safety margin kept free along its edges."""

    width: float = 1.10
    height: float = 0.65
    safety_margin: float = 0.05
    backdrop_edge: str = "north"

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise GeometryError("workspace dimensions must be positive")
        if not (0 <= self.safety_margin < min(self.width, self.height) / 2):
            raise GeometryError(
                f"safety_margin {self.safety_margin} must be in [0, min(w,h)/2)"
            )
        if self.backdrop_edge not in BACKDROP_EDGES:
            raise GeometryError(f"unknown backdrop edge {self.backdrop_edge!r}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.width / 2.0, self.height / 2.0)

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        return (margin <= x <= self.width - margin
                and margin <= y <= self.height - margin)

    def backdrop_distance(self, x: float, y: float) -> float:
        """Perpendicular distance from (x, y) to the backdrop edge plane."""
        if self.backdrop_edge == "north":
            d = self.height - y
        elif self.backdrop_edge == "south":
            d = y
        elif self.backdrop_edge == "east":
            d = self.width - x
        else:
            d = x
        return max(d, 0.0)

    def along_backdrop(self, x: float, y: float) -> float:
        """Normalized [0,1] position along the backdrop edge, left-to-right
        as seen by someone at the table facing the backdrop."""
        if self.backdrop_edge == "north":
            u = x / self.width
        elif self.backdrop_edge == "south":
            u = 1.0 - x / self.width
        elif self.backdrop_edge == "east":
            u = 1.0 - y / self.height
        else:
            u = y / self.height
        return u


@dataclass(frozen=True)
class TablePose:
    """One tracked 6-DoF sample of a proxy, in table coordinates."""

    x: float
    y: float
    z: float
    yaw: float
    pitch: float
    roll: float
    t_ms: int

    def __post_init__(self) -> None:
        for name in ("x", "y", "z", "yaw", "pitch", "roll"):
            if not math.isfinite(getattr(self, name)):
                raise GeometryError(f"pose component {name} is not finite")
        if self.z < 0:
            raise GeometryError("pose z must be >= 0")


@dataclass(frozen=True)
class MapViewport:
    """Current map view: center, scale and rotation about the vertical axis.

    zoom_level is the map scale denominator: ground meters represented by
    one meter of table.  Doubling it zooms out, halving the on-table
    displacement of a fixed geo offset.
    """

    center_lat: float
    center_lon: float
    zoom_level: float
    rotation: float = 0.0

    def __post_init__(self) -> None:
        if not self.zoom_level > 0:
            raise GeometryError("zoom_level must be > 0")


def _geo_to_ground(viewport: MapViewport, lat: float, lon: float) -> tuple[float, float]:
    lat0 = math.radians(viewport.center_lat)
    east = EARTH_RADIUS_M * math.cos(lat0) * math.radians(lon - viewport.center_lon)
    north = EARTH_RADIUS_M * math.radians(lat - viewport.center_lat)
    return east, north


def geo_to_table(viewport: MapViewport, geo: tuple[float, float],
                 ws: Workspace) -> tuple[float, float]:
    """Project a (lat, lon) point to table meters under the viewport.

    Total over finite inputs; the result may fall outside the workspace,
    callers clamp or hide as appropriate.
    """
    lat, lon = geo
    east, north = _geo_to_ground(viewport, lat, lon)
    ex = east / viewport.zoom_level
    ny = north / viewport.zoom_level
    c, s = math.cos(viewport.rotation), math.sin(viewport.rotation)
    tx = c * ex - s * ny
    ty = s * ex + c * ny
    cx, cy = ws.center
    return (cx + tx, cy + ty)


def table_to_geo(viewport: MapViewport, point: tuple[float, float],
                 ws: Workspace) -> tuple[float, float]:
    """Exact inverse of geo_to_table up to floating point."""
    cx, cy = ws.center
    tx, ty = point[0] - cx, point[1] - cy
    c, s = math.cos(viewport.rotation), math.sin(viewport.rotation)
    ex = c * tx + s * ty
    ny = -s * tx + c * ty
    east = ex * viewport.zoom_level
    north = ny * viewport.zoom_level
    lat0 = math.radians(viewport.center_lat)
    lon = viewport.center_lon + math.degrees(east / (EARTH_RADIUS_M * math.cos(lat0)))
    lat = viewport.center_lat + math.degrees(north / EARTH_RADIUS_M)
    return (lat, lon)


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi
