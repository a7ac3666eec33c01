"""Carrier behavior: return-to-map-position, halting when lifted, yielding.

The fleet advances on a single logical clock.  Each tick, in fixed robot
id order (which is also planning priority):

  * held robots get a zero wheel command in that same tick;
  * robots that were just placed down somewhere wrong, or whose map
    target moved under a viewport change, get a fresh target and a fresh
    plan (blocked plans back off exponentially up to a 2 s cap);
  * navigating robots are steered by a pure-pursuit tracker along the
    smoothed path, rotate in place to the target yaw on arrival, then
    idle;
  * a runtime guard vetoes any advance that would bring two robot
    centers too close; the lower-priority robot additionally yields
    early, and a robot stalled too long replans around whatever is in
    its way.

Held robots are off the table plane and are never treated as obstacles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ..geometry import MapViewport, Workspace, geo_to_table, wrap_angle
from ..scenario import Building
from .grid import OccupancyGrid
from .kinematics import RobotParams, clamp_wheels, step_kinematics
from .planner import BlockedError, Path, PlannerConfig, parked_path, plan


class TargetError(RuntimeError):
    """Target is unreachable under the current viewport."""


@dataclass(frozen=True)
class ControllerConfig:
    pos_tol: float = 0.005        # m
    yaw_tol: float = math.radians(3.0)
    lookahead: float = 0.06       # m, pure-pursuit target distance
    cruise_speed: float = 0.11    # m/s straight-line speed
    approach_gain: float = 2.5    # slows v near the final waypoint
    align_angle: float = math.radians(60.0)  # beyond this, rotate in place
    turn_speed: float = 0.08      # m/s wheel speed while rotating in place
    clamp_tol: float = 0.05       # m of silent target clamping into the grid
    guard_hard: float = 0.006     # m beyond 2r nobody may close below
    guard_soft: float = 0.024     # m beyond 2r where lower priority yields
    stall_replan_s: float = 1.0   # stalled this long -> replan
    retreat_s: float = 0.6        # reverse this long after repeated stalls
    backoff_initial_s: float = 0.05
    backoff_cap_s: float = 2.0    # cap on blocked-plan retry backoff


class Mode(enum.Enum):
    IDLE = "idle"
    NAVIGATING = "navigating"
    ALIGNING = "aligning"
    HELD = "held"
    WAITING = "waiting"  # blocked plan, backing off


@dataclass
class Robot:
    id: str
    building: str
    pose: tuple[float, float, float]  # x, y, yaw
    mode: Mode = Mode.IDLE
    path: Path | None = None
    path_started: float = 0.0
    waypoint_idx: int = 0
    target: tuple[float, float, float] | None = None
    wheel_cmd: tuple[float, float] = (0.0, 0.0)
    needs_plan: bool = False
    wait_until: float = 0.0
    backoff: float = 0.0
    stalled_since: float | None = None
    consecutive_stalls: int = 0
    retreat_until: float = 0.0
    unreachable: bool = False
    odometry: float = 0.0
    replans: int = 0


def assign_target(building: Building, viewport: MapViewport, ws: Workspace,
                  grid: OccupancyGrid, clamp_tol: float = 0.05,
                  ) -> tuple[float, float, float]:
    """Where the carrier should sit for its building under this viewport.

    The projected anchor is clamped into the navigable region; drifting
    further than clamp_tol raises TargetError (the caller parks the robot
    at the nearest free cell and flags it).
    """
    raw = geo_to_table(viewport, building.geo_anchor, ws)
    yaw = wrap_angle(building.home_yaw + viewport.rotation)
    band = ws.safety_margin + grid.inflation + grid.cell_size
    x = min(max(raw[0], band), ws.width - band)
    y = min(max(raw[1], band), ws.height - band)
    cell = grid.cell_of(x, y)
    if not grid.is_free(*cell):
        snapped = grid.nearest_free_cell(x, y)
        if snapped is None:
            raise TargetError(f"no navigable cells for {building.id}")
        x, y = grid.center_of(*snapped)
    if math.dist(raw, (x, y)) > clamp_tol:
        raise TargetError(
            f"building {building.id} anchor unreachable under viewport "
            f"(off by {math.dist(raw, (x, y)):.3f} m)")
    return (x, y, yaw)


def follow(robot: Robot, path: Path, dt: float, params: RobotParams,
           cfg: ControllerConfig) -> tuple[float, float]:
    """One pure-pursuit step along the smoothed polyline.

    Advances the robot's waypoint index, flips mode to ALIGNING within
    pos_tol of the final waypoint and to IDLE once the yaw settles.
    """
    x, y, yaw = robot.pose
    pts = path.smoothed
    # Advance past waypoints we are close enough to (never past the last).
    while (robot.waypoint_idx < len(pts) - 1
           and math.dist((x, y), pts[robot.waypoint_idx]) < cfg.lookahead * 0.5):
        robot.waypoint_idx += 1
    tx, ty = pts[robot.waypoint_idx]
    dist = math.dist((x, y), (tx, ty))
    final = robot.waypoint_idx == len(pts) - 1

    if final and dist <= cfg.pos_tol:
        robot.mode = Mode.ALIGNING
        return (0.0, 0.0)

    alpha = wrap_angle(math.atan2(ty - y, tx - x) - yaw)
    if abs(alpha) > cfg.align_angle:
        s = cfg.turn_speed if alpha > 0 else -cfg.turn_speed
        return (-s, s)

    v = cfg.cruise_speed
    if final:
        v = min(v, cfg.approach_gain * dist + 0.005)
    lookahead = max(dist, 1e-6)
    omega = 2.0 * v * math.sin(alpha) / lookahead
    v_left = v - omega * params.wheel_base / 2.0
    v_right = v + omega * params.wheel_base / 2.0
    return clamp_wheels(v_left, v_right, params.max_wheel_speed)


def _align_step(robot: Robot, dt: float, params: RobotParams,
                cfg: ControllerConfig) -> tuple[float, float]:
    yaw_err = wrap_angle(robot.target[2] - robot.pose[2])
    if abs(yaw_err) <= cfg.yaw_tol:
        robot.mode = Mode.IDLE
        return (0.0, 0.0)
    omega_max = 2.0 * params.max_wheel_speed / params.wheel_base
    omega = math.copysign(min(omega_max, abs(yaw_err) / dt), yaw_err)
    wheel = omega * params.wheel_base / 2.0
    return (-wheel, wheel)


class Fleet:
    """All carriers on one table, advanced in lockstep."""

    def __init__(self, ws: Workspace, buildings: dict[str, Building],
                 robot_bindings: dict[str, str], viewport: MapViewport,
                 params: RobotParams | None = None,
                 cfg: ControllerConfig | None = None,
                 grid: OccupancyGrid | None = None,
                 planner_cfg: PlannerConfig | None = None):
        self.ws = ws
        self.buildings = buildings
        self.params = params or RobotParams()
        self.cfg = cfg or ControllerConfig()
        self.grid = grid or OccupancyGrid.from_workspace(
            ws, inflation=self.params.radius + 0.01)
        self.planner_cfg = planner_cfg or PlannerConfig(
            separation=2 * self.params.radius + 0.03)
        self.viewport = viewport
        self.robots: list[Robot] = []
        self.blocked_events = 0
        for rid in sorted(robot_bindings):  # fixed id order = priority
            bid = robot_bindings[rid]
            robot = Robot(id=rid, building=bid, pose=(0.0, 0.0, 0.0))
            self._retarget(robot)
            if robot.target is not None:
                robot.pose = robot.target
            self.robots.append(robot)

    # -- external events ---------------------------------------------------

    def robot_by_id(self, rid: str) -> Robot:
        for r in self.robots:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def hold(self, rid: str) -> None:
        r = self.robot_by_id(rid)
        r.mode = Mode.HELD
        r.wheel_cmd = (0.0, 0.0)
        r.path = None
        r.needs_plan = False

    def release(self, rid: str, x: float, y: float, yaw: float) -> None:
        """Proxy placed back on the table at (x, y, yaw)."""
        r = self.robot_by_id(rid)
        r.pose = (x, y, yaw)
        r.mode = Mode.IDLE
        r.backoff = 0.0
        r.wait_until = 0.0
        r.needs_plan = not self._at_target(r)

    def set_viewport(self, viewport: MapViewport) -> None:
        self.viewport = viewport
        for r in self.robots:
            self._retarget(r)
            if r.mode is not Mode.HELD:
                r.needs_plan = not self._at_target(r)
                if r.needs_plan:
                    r.path = None
                    r.mode = Mode.IDLE

    def _retarget(self, robot: Robot) -> None:
        building = self.buildings[robot.building]
        try:
            robot.target = assign_target(building, self.viewport, self.ws,
                                         self.grid, self.cfg.clamp_tol)
            robot.unreachable = False
        except TargetError:
            robot.unreachable = True
            cell = self.grid.nearest_free_cell(*self.ws.center)
            cx, cy = self.grid.center_of(*cell)
            yaw = wrap_angle(building.home_yaw + self.viewport.rotation)
            robot.target = (cx, cy, yaw)

    def _at_target(self, robot: Robot) -> bool:
        if robot.target is None:
            return True
        dx = math.dist(robot.pose[:2], robot.target[:2])
        dyaw = abs(wrap_angle(robot.pose[2] - robot.target[2]))
        return dx <= self.cfg.pos_tol and dyaw <= self.cfg.yaw_tol

    # -- planning ----------------------------------------------------------

    def _reservations(self, me: Robot, now: float,
                      fresh: set[str] | None = None) -> list:
        """What the planner must avoid, from ``me``'s point of view.

        Schedules are only trusted for robots planned in this same tick
        (a replanning wave); anything else is represented by its actual
        current position, since a stalled robot's schedule lies about
        where it is.  A robot that keeps stalling stops believing its
        blockers will move and plans a real detour around them.
        """
        fresh = fresh or set()
        short = self.planner_cfg.transient_steps
        # A robot that keeps stalling stops believing its blockers leave
        # soon and routes around them for a long while instead; their
        # spots still never poison goal feasibility.
        span = short if me.consecutive_stalls < 2 else short * 6
        others = []
        for r in self.robots:
            if r.id == me.id or r.mode is Mode.HELD:
                continue
            if r.id in fresh and r.path is not None:
                others.append((r.path, r.path_started, None))
            elif r.mode is Mode.IDLE and self._at_target(r) and not r.needs_plan:
                others.append((parked_path(r.pose[0], r.pose[1]), now, None))
            else:
                others.append((parked_path(r.pose[0], r.pose[1]), now, span))
        return others

    def _try_plan(self, robot: Robot, now: float,
                  fresh: set[str] | None = None) -> None:
        others = self._reservations(robot, now, fresh)
        try:
            path = plan(self.grid, robot.pose[:2], robot.target[:2],
                        others=others, cfg=self.planner_cfg, start_time=now)
        except BlockedError:
            self.blocked_events += 1
            robot.backoff = (min(robot.backoff * 2, self.cfg.backoff_cap_s)
                             if robot.backoff > 0 else self.cfg.backoff_initial_s)
            robot.wait_until = now + robot.backoff
            robot.mode = Mode.WAITING
            return
        robot.path = path
        robot.path_started = now
        robot.waypoint_idx = 0
        robot.mode = Mode.NAVIGATING
        robot.needs_plan = False
        robot.backoff = 0.0
        robot.replans += 1
        robot.stalled_since = None

    # -- the tick ------------------------------------------------------------

    def _guarded_step(self, idx: int, robot: Robot, cmd: tuple[float, float],
                      dt: float, hard: float, soft: float) -> bool:
        """Execute cmd if it passes the guard; returns whether it moved.

        The guard never lets a pair close in below the hard floor (a robot
        already inside may back out), keeps everything inside the safety
        margin, and makes lower priority yield early to higher-priority
        robots in transit.
        """
        if cmd == (0.0, 0.0):
            return False
        nxt = step_kinematics(robot.pose, cmd, self.params.wheel_base, dt)
        if not self.ws.contains(nxt[0], nxt[1], self.ws.safety_margin):
            return False
        for jdx, other in enumerate(self.robots):
            if jdx == idx or other.mode is Mode.HELD:
                continue
            d_now = math.dist(robot.pose[:2], other.pose[:2])
            d_next = math.dist(nxt[:2], other.pose[:2])
            approaching = d_next < d_now
            if d_next < hard and (approaching or d_now >= hard):
                return False
            other_moving = other.wheel_cmd != (0.0, 0.0)
            if d_next < soft and jdx < idx and approaching and other_moving:
                return False
        robot.odometry += math.dist(robot.pose[:2], nxt[:2])
        robot.pose = nxt
        robot.wheel_cmd = cmd
        return True

    def tick(self, now: float, dt: float) -> list[tuple[str, float, float]]:
        """Advance every robot by dt seconds; returns wheel commands."""
        if not 0 < dt <= 0.1:
            raise ValueError("dt must be in (0, 0.1] s")
        cfg = self.cfg
        commands: list[tuple[str, float, float]] = []
        hard = 2 * self.params.radius + cfg.guard_hard
        soft = 2 * self.params.radius + cfg.guard_soft
        fresh: set[str] = set()

        for idx, robot in enumerate(self.robots):
            if robot.mode is Mode.HELD:
                robot.wheel_cmd = (0.0, 0.0)
                commands.append((robot.id, 0.0, 0.0))
                continue

            if robot.mode is Mode.WAITING and now >= robot.wait_until:
                robot.mode = Mode.IDLE

            if robot.needs_plan and robot.mode in (Mode.IDLE, Mode.NAVIGATING) \
                    and now >= robot.wait_until:
                self._try_plan(robot, now, fresh)
                if robot.mode is Mode.NAVIGATING:
                    fresh.add(robot.id)

            robot.wheel_cmd = (0.0, 0.0)

            if now < robot.retreat_until:
                # Jammed recently: back straight off to make room before
                # the deferred replan fires.
                self._guarded_step(idx, robot,
                                   (-cfg.turn_speed, -cfg.turn_speed),
                                   dt, hard, soft)
                commands.append((robot.id, *robot.wheel_cmd))
                continue

            cmd = (0.0, 0.0)
            if robot.mode is Mode.NAVIGATING and robot.path is not None:
                cmd = follow(robot, robot.path, dt, self.params, cfg)
            if robot.mode is Mode.ALIGNING:
                cmd = _align_step(robot, dt, self.params, cfg)

            if cmd != (0.0, 0.0):
                if self._guarded_step(idx, robot, cmd, dt, hard, soft):
                    robot.stalled_since = None
                    robot.consecutive_stalls = 0
                else:
                    # Blocked: reorient toward the waypoint while standing
                    # (rotation cannot violate the guard), and escalate to
                    # replans, then a retreat, if it keeps happening.
                    if robot.mode is Mode.NAVIGATING and robot.path is not None:
                        pts = robot.path.smoothed
                        tx, ty = pts[min(robot.waypoint_idx, len(pts) - 1)]
                        x, y, yaw = robot.pose
                        alpha = wrap_angle(math.atan2(ty - y, tx - x) - yaw)
                        if abs(alpha) > 0.05:
                            s = cfg.turn_speed if alpha > 0 else -cfg.turn_speed
                            self._guarded_step(idx, robot, (-s, s), dt,
                                               hard, soft)
                    if robot.stalled_since is None:
                        robot.stalled_since = now
                    elif (robot.mode is Mode.NAVIGATING
                          and now - robot.stalled_since >= cfg.stall_replan_s
                          and now >= robot.wait_until):
                        robot.needs_plan = True
                        robot.consecutive_stalls += 1
                        robot.stalled_since = now
                        if robot.consecutive_stalls >= 2:
                            robot.retreat_until = now + cfg.retreat_s
                            robot.wait_until = now + cfg.retreat_s + dt

            commands.append((robot.id, robot.wheel_cmd[0], robot.wheel_cmd[1]))

        return commands

    def all_settled(self) -> bool:
        return all(r.mode in (Mode.IDLE, Mode.HELD) and
                   (r.mode is Mode.HELD or self._at_target(r) or r.unreachable)
                   for r in self.robots)
