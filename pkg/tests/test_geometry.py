"""Projection and workspace geometry tests."""

import math
import random

import pytest

from proxydash.geometry import (GeometryError, MapViewport, TablePose,
                                Workspace, geo_to_table, table_to_geo,
                                wrap_angle)

WS = Workspace()
VP = MapViewport(center_lat=47.6550, center_lon=-122.3035, zoom_level=900.0)


def test_center_is_projection_fixed_point():
    x, y = geo_to_table(VP, (VP.center_lat, VP.center_lon), WS)
    assert x == pytest.approx(WS.width / 2)
    assert y == pytest.approx(WS.height / 2)
    lat, lon = table_to_geo(VP, WS.center, WS)
    assert lat == pytest.approx(VP.center_lat)
    assert lon == pytest.approx(VP.center_lon)


def test_east_of_center_maps_to_positive_x():
    x, y = geo_to_table(VP, (VP.center_lat, VP.center_lon + 0.001), WS)
    assert x > WS.width / 2
    assert y == pytest.approx(WS.height / 2)


def test_north_of_center_maps_to_positive_y():
    x, y = geo_to_table(VP, (VP.center_lat + 0.001, VP.center_lon), WS)
    assert y > WS.height / 2
    assert x == pytest.approx(WS.width / 2)


def test_round_trip_100_random_points():
    # Inverse-composition oracle: table -> geo -> table must return the
    # starting point to well under a nanometer-scale tolerance.
    rng = random.Random(42)
    for _ in range(100):
        p = (rng.uniform(0, WS.width), rng.uniform(0, WS.height))
        vp = MapViewport(center_lat=rng.uniform(-60, 60),
                         center_lon=rng.uniform(-179, 179),
                         zoom_level=rng.uniform(50, 5000),
                         rotation=rng.uniform(-math.pi, math.pi))
        q = geo_to_table(vp, table_to_geo(vp, p, WS), WS)
        assert math.dist(p, q) < 1e-9


def test_doubling_zoom_halves_displacement():
    geo = (VP.center_lat + 0.0005, VP.center_lon + 0.0005)
    x1, y1 = geo_to_table(VP, geo, WS)
    vp2 = MapViewport(VP.center_lat, VP.center_lon, VP.zoom_level * 2)
    x2, y2 = geo_to_table(vp2, geo, WS)
    cx, cy = WS.center
    assert (x2 - cx) == pytest.approx((x1 - cx) / 2)
    assert (y2 - cy) == pytest.approx((y1 - cy) / 2)


def test_rotation_rotates_about_center():
    geo = table_to_geo(VP, (WS.width / 2 + 0.2, WS.height / 2), WS)
    vp = MapViewport(VP.center_lat, VP.center_lon, VP.zoom_level,
                     rotation=math.pi / 2)
    x, y = geo_to_table(vp, geo, WS)
    assert x == pytest.approx(WS.width / 2)
    assert y == pytest.approx(WS.height / 2 + 0.2)


def test_workspace_validation():
    with pytest.raises(GeometryError):
        Workspace(width=-1.0)
    with pytest.raises(GeometryError):
        Workspace(safety_margin=0.4)  # >= min(w,h)/2
    with pytest.raises(GeometryError):
        Workspace(backdrop_edge="up")


def test_backdrop_distance_per_edge():
    assert Workspace(backdrop_edge="north").backdrop_distance(0.3, 0.5) == pytest.approx(0.15)
    assert Workspace(backdrop_edge="south").backdrop_distance(0.3, 0.5) == pytest.approx(0.5)
    assert Workspace(backdrop_edge="east").backdrop_distance(0.3, 0.5) == pytest.approx(0.8)
    assert Workspace(backdrop_edge="west").backdrop_distance(0.3, 0.5) == pytest.approx(0.3)


def test_pose_validation():
    with pytest.raises(GeometryError):
        TablePose(x=float("nan"), y=0, z=0, yaw=0, pitch=0, roll=0, t_ms=0)
    with pytest.raises(GeometryError):
        TablePose(x=0, y=0, z=-0.01, yaw=0, pitch=0, roll=0, t_ms=0)


def test_viewport_requires_positive_zoom():
    with pytest.raises(GeometryError):
        MapViewport(center_lat=0, center_lon=0, zoom_level=0.0)


def test_wrap_angle_range():
    for a in (-10.0, -math.pi, 0.0, math.pi, 10.0, 123.456):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-12)
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)
