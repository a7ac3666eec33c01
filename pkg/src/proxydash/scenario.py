"""Scenario files: buildings, workspace, viewport and the proxy binding.

A scenario is a JSON document declaring the workspace, the buildings
(with footprints and geo anchors), the initial viewport, the dataset
path and the fixed 1:1 proxy-to-building binding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import GeometryError, MapViewport, Workspace


class ScenarioError(ValueError):
    pass


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4


def is_simple_polygon(vertices: list[tuple[float, float]]) -> bool:
    """True when no two non-adjacent edges cross (n is small, O(n^2) is fine)."""
    n = len(vertices)
    if n < 3:
        return False
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


@dataclass(frozen=True)
class Building:
    """A physical referent: map anchor, home orientation and icon footprint."""

    id: str
    name: str
    color: str  # "#rrggbb"
    footprint: tuple[tuple[float, float], ...]  # local meters, simple polygon
    geo_anchor: tuple[float, float]  # (lat, lon)
    home_yaw: float = 0.0

    def __post_init__(self) -> None:
        if not self.id:
            raise ScenarioError("building id must be non-empty")
        if not (self.color.startswith("#") and len(self.color) == 7):
            raise ScenarioError(f"building {self.id}: color must be #rrggbb")
        if not is_simple_polygon(list(self.footprint)):
            raise ScenarioError(f"building {self.id}: footprint is not a simple polygon")
        lat, lon = self.geo_anchor
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise ScenarioError(f"building {self.id}: geo anchor not finite")

    def rgb(self) -> tuple[float, float, float]:
        h = self.color.lstrip("#")
        return tuple(int(h[i:i + 2], 16) / 255.0 for i in (0, 2, 4))


@dataclass
class Scenario:
    id: str
    workspace: Workspace
    buildings: dict[str, Building]
    viewport: MapViewport
    dataset_path: str | None = None
    bindings: dict[str, str] = field(default_factory=dict)  # proxy -> building

    def __post_init__(self) -> None:
        if len({b.id for b in self.buildings.values()}) != len(self.buildings):
            raise ScenarioError("duplicate building ids")
        for proxy, bid in self.bindings.items():
            if bid not in self.buildings:
                raise ScenarioError(f"binding {proxy} -> unknown building {bid!r}")

    def building_of(self, proxy: str) -> Building:
        try:
            return self.buildings[self.bindings[proxy]]
        except KeyError:
            raise ScenarioError(f"proxy {proxy!r} is not bound to a building") from None


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "id": sc.id,
        "workspace": {
            "width": sc.workspace.width,
            "height": sc.workspace.height,
            "safety_margin": sc.workspace.safety_margin,
            "backdrop_edge": sc.workspace.backdrop_edge,
        },
        "viewport": {
            "center": [sc.viewport.center_lat, sc.viewport.center_lon],
            "zoom_level": sc.viewport.zoom_level,
            "rotation": sc.viewport.rotation,
        },
        "buildings": [
            {
                "id": b.id,
                "name": b.name,
                "color": b.color,
                "geo_anchor": list(b.geo_anchor),
                "footprint": [list(v) for v in b.footprint],
                "home_yaw": b.home_yaw,
            }
            for b in sc.buildings.values()
        ],
        "dataset": sc.dataset_path,
        "bindings": dict(sc.bindings),
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        ws = Workspace(**doc["workspace"])
        vp_doc = doc["viewport"]
        viewport = MapViewport(
            center_lat=vp_doc["center"][0],
            center_lon=vp_doc["center"][1],
            zoom_level=vp_doc["zoom_level"],
            rotation=vp_doc.get("rotation", 0.0),
        )
        buildings = {}
        for b in doc["buildings"]:
            bld = Building(
                id=b["id"],
                name=b["name"],
                color=b["color"],
                footprint=tuple(tuple(v) for v in b["footprint"]),
                geo_anchor=tuple(b["geo_anchor"]),
                home_yaw=b.get("home_yaw", 0.0),
            )
            buildings[bld.id] = bld
        return Scenario(
            id=doc["id"],
            workspace=ws,
            buildings=buildings,
            viewport=viewport,
            dataset_path=doc.get("dataset"),
            bindings=dict(doc.get("bindings", {})),
        )
    except (KeyError, TypeError, GeometryError) as exc:
        raise ScenarioError(f"bad scenario document: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")
