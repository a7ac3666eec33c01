"""Carrier controller tests: tracking, convergence, tick orchestration."""

import math

import pytest

from proxydash.fixtures import default_scenario
from proxydash.geometry import MapViewport, Workspace, geo_to_table
from proxydash.robots import (ControllerConfig, Fleet, Mode, OccupancyGrid,
                              Robot, RobotParams, TargetError, assign_target,
                              follow, step_kinematics)
from proxydash.robots.planner import PlannerConfig, plan

PARAMS = RobotParams()
CFG = ControllerConfig()


def make_fleet(n=5):
    sc = default_scenario(n)
    return Fleet(sc.workspace, sc.buildings, dict(sc.bindings), sc.viewport), sc


# -- assign_target ---------------------------------------------------------

def test_target_at_viewport_center_is_table_center():
    fleet, sc = make_fleet()
    b = sc.buildings["B3"]
    vp = MapViewport(center_lat=b.geo_anchor[0], center_lon=b.geo_anchor[1],
                     zoom_level=sc.viewport.zoom_level)
    x, y, yaw = assign_target(b, vp, sc.workspace, fleet.grid)
    assert (x, y) == pytest.approx(sc.workspace.center)


def test_viewport_rotation_adds_to_target_yaw():
    fleet, sc = make_fleet()
    b = sc.buildings["B3"]
    base = assign_target(b, sc.viewport, sc.workspace, fleet.grid)
    vp = MapViewport(sc.viewport.center_lat, sc.viewport.center_lon,
                     sc.viewport.zoom_level, rotation=math.pi / 2)
    rotated = assign_target(b, vp, sc.workspace, fleet.grid)
    assert math.remainder(rotated[2] - base[2], 2 * math.pi) == pytest.approx(
        math.pi / 2)


def test_anchor_far_off_table_is_unreachable():
    fleet, sc = make_fleet()
    b = sc.buildings["B1"]
    # Zooming far in throws anchors way off the table.
    vp = MapViewport(sc.viewport.center_lat, sc.viewport.center_lon,
                     zoom_level=sc.viewport.zoom_level / 50)
    raw = geo_to_table(vp, b.geo_anchor, sc.workspace)
    assert not sc.workspace.contains(*raw)
    with pytest.raises(TargetError, match="unreachable"):
        assign_target(b, vp, sc.workspace, fleet.grid)


def test_unreachable_parks_at_free_cell_and_flags():
    fleet, sc = make_fleet()
    vp = MapViewport(sc.viewport.center_lat, sc.viewport.center_lon,
                     zoom_level=sc.viewport.zoom_level / 50)
    fleet.set_viewport(vp)
    for r in fleet.robots:
        assert r.unreachable
        assert fleet.grid.is_free(*fleet.grid.cell_of(*r.target[:2]))


# -- follow ------------------------------------------------------------------

def straight_path(goal):
    grid = OccupancyGrid.from_rows([[0] * 60 for _ in range(60)], cell_size=0.02)
    return plan(grid, (0.05, 0.05), goal)


def test_follow_straight_segment_equal_wheels():
    path = straight_path((1.0, 0.05))
    robot = Robot(id="R", building="B", pose=(0.2, 0.05, 0.0),
                  mode=Mode.NAVIGATING, target=(1.0, 0.05, 0.0))
    robot.waypoint_idx = len(path.smoothed) - 1
    vl, vr = follow(robot, path, 0.01, PARAMS, CFG)
    assert vl == pytest.approx(vr)
    assert vl > 0


def test_follow_target_behind_rotates_in_place():
    path = straight_path((1.0, 0.05))
    robot = Robot(id="R", building="B", pose=(0.2, 0.05, math.pi),
                  mode=Mode.NAVIGATING, target=(1.0, 0.05, 0.0))
    robot.waypoint_idx = len(path.smoothed) - 1
    vl, vr = follow(robot, path, 0.01, PARAMS, CFG)
    assert vl == pytest.approx(-vr)
    assert vl != 0


def closed_loop(dt, start=(0.15, 0.15, 2.5), goal=(0.95, 0.5, -1.0)):
    ws = Workspace()
    grid = OccupancyGrid.from_workspace(ws, inflation=PARAMS.radius + 0.01)
    path = plan(grid, start[:2], goal[:2])
    robot = Robot(id="R", building="B", pose=start, mode=Mode.NAVIGATING,
                  path=path, target=goal)
    t = 0.0
    while t < 60.0:
        if robot.mode is Mode.NAVIGATING:
            cmd = follow(robot, path, dt, PARAMS, CFG)
        elif robot.mode is Mode.ALIGNING:
            from proxydash.robots.controller import _align_step
            cmd = _align_step(robot, dt, PARAMS, CFG)
        else:
            break
        if cmd != (0.0, 0.0):
            robot.pose = step_kinematics(robot.pose, cmd, PARAMS.wheel_base, dt)
        t += dt
    return robot, t


@pytest.mark.parametrize("dt", [0.001, 0.01])
def test_closed_loop_converges_within_60s(dt):
    goal = (0.95, 0.5, -1.0)
    robot, t = closed_loop(dt, goal=goal)
    assert robot.mode is Mode.IDLE
    assert t < 60.0
    assert math.dist(robot.pose[:2], goal[:2]) <= CFG.pos_tol
    assert abs(math.remainder(robot.pose[2] - goal[2], 2 * math.pi)) <= CFG.yaw_tol


def test_closed_loop_dt_refinement_agrees():
    # Integration oracle: fine and coarse rates settle onto the same goal.
    goal = (0.95, 0.5, -1.0)
    fine, _ = closed_loop(0.001, goal=goal)
    coarse, _ = closed_loop(0.01, goal=goal)
    assert math.dist(fine.pose[:2], coarse.pose[:2]) <= 2 * CFG.pos_tol


# -- tick orchestration -------------------------------------------------------

def test_all_settled_tick_is_fixed_point():
    fleet, _ = make_fleet()
    poses = [r.pose for r in fleet.robots]
    for k in range(10):
        commands = fleet.tick(0.01 * (k + 1), 0.01)
        assert all(vl == 0.0 and vr == 0.0 for _, vl, vr in commands)
    assert [r.pose for r in fleet.robots] == poses


def test_viewport_change_replans_each_idle_robot_once():
    fleet, sc = make_fleet()
    vp = MapViewport(sc.viewport.center_lat + 30 / 111_000.0,
                     sc.viewport.center_lon, sc.viewport.zoom_level)
    fleet.set_viewport(vp)
    now = 0.0
    for k in range(4000):
        now += 0.01
        fleet.tick(now, 0.01)
        if fleet.all_settled():
            break
    assert fleet.all_settled()
    assert all(r.replans == 1 for r in fleet.robots)
    for r in fleet.robots:
        assert math.dist(r.pose[:2], r.target[:2]) <= CFG.pos_tol


def test_held_robot_halts_same_tick_and_skips_replanning():
    fleet, sc = make_fleet()
    vp = MapViewport(sc.viewport.center_lat + 30 / 111_000.0,
                     sc.viewport.center_lon, sc.viewport.zoom_level)
    fleet.set_viewport(vp)
    fleet.hold("P1")
    commands = dict((rid, (vl, vr)) for rid, vl, vr in fleet.tick(0.01, 0.01))
    assert commands["P1"] == (0.0, 0.0)
    assert fleet.robot_by_id("P1").mode is Mode.HELD
    assert fleet.robot_by_id("P1").replans == 0


def test_release_at_target_stays_idle():
    fleet, _ = make_fleet()
    r = fleet.robot_by_id("P2")
    fleet.hold("P2")
    fleet.release("P2", *r.target)
    assert r.mode is Mode.IDLE and not r.needs_plan


def test_release_misplaced_plans_and_returns():
    fleet, _ = make_fleet()
    r = fleet.robot_by_id("P2")
    fleet.hold("P2")
    fleet.release("P2", 0.70, 0.30, 1.0)
    now = 0.0
    for k in range(6000):
        now += 0.01
        fleet.tick(now, 0.01)
        if fleet.all_settled():
            break
    assert fleet.all_settled()
    assert math.dist(r.pose[:2], r.target[:2]) <= CFG.pos_tol
    assert r.replans >= 1


def test_tick_rejects_bad_dt():
    fleet, _ = make_fleet()
    with pytest.raises(ValueError):
        fleet.tick(0.0, 0.0)
    with pytest.raises(ValueError):
        fleet.tick(0.0, 0.2)


def test_two_robots_swap_targets_without_contact():
    # Drop each robot near the other's park so the return routes cross;
    # the guard plus reservations must keep the pair beyond the hard
    # floor the whole way.
    sc = default_scenario(2)
    fleet = Fleet(sc.workspace, sc.buildings, dict(sc.bindings), sc.viewport)
    a, b = fleet.robots
    fleet.hold(a.id)
    fleet.release(a.id, 0.80, 0.45, 0.0)
    fleet.hold(b.id)
    fleet.release(b.id, 0.80, 0.16, 0.0)
    floor = 2 * PARAMS.radius - 0.001
    now = 0.0
    for k in range(8000):
        now += 0.01
        fleet.tick(now, 0.01)
        assert math.dist(a.pose[:2], b.pose[:2]) >= floor
        if fleet.all_settled():
            break
    assert fleet.all_settled()
