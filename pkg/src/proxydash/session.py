"""Headless in-process session: simulator + gesture engines + reducer.

One logical clock drives everything, so a session is a pure function of
(scenario, configs, scripted input envelopes).  Scripted inputs are
tracker pose updates (a human manipulating proxies) and tabletop
viewport changes; everything else - events, robot motion, dashboard
state - is derived.  Re-running the same inputs reproduces the final
state and robot poses bit for bit, which is the backbone of the
record/replay tests.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .charts import ChartData
from .dashboard import (DashboardState, INITIAL_STATE, RenderModel, reduce,
                        snapshot, state_hash, state_to_dict, with_shadow)
from .dataset import ReadingSet
from .gestures import (DashboardLayout, EventKind, GestureConfig, GestureEngine,
                       InteractionEvent)
from .geometry import MapViewport, TablePose
from .hub import Envelope, Trace
from .robots import ControllerConfig, Fleet, Mode, RobotParams
from .scenario import Scenario

INPUT_ROLES = frozenset({"tracker", "tabletop"})


def is_input(env: Envelope) -> bool:
    """Envelopes that drive a session (everything else is derived output)."""
    return (env.role == "tracker" and env.kind == "pose_update") or \
           (env.kind == "viewport_change")


@dataclass
class Metrics:
    duration_s: float
    ticks: int
    collision_count: int
    boundary_violations: int
    path_length: dict[str, float]
    replan_count: dict[str, int]
    event_counts: dict[str, int]
    final_state_hash: str
    robot_poses: dict[str, tuple[float, float, float]]
    settled: bool
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.collision_count == 0 and not self.violations

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def config_hash(scenario: Scenario, gesture_cfg: GestureConfig,
                params: RobotParams, sim_dt: float) -> str:
    from .scenario import scenario_to_dict

    blob = json.dumps({"scenario": scenario_to_dict(scenario),
                       "gesture": asdict(gesture_cfg),
                       "robot": asdict(params),
                       "sim_dt": sim_dt}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class Session:
    def __init__(self, scenario: Scenario, readings: ReadingSet | None = None,
                 gesture_cfg: GestureConfig | None = None,
                 layout: DashboardLayout | None = None,
                 params: RobotParams | None = None,
                 controller_cfg: ControllerConfig | None = None,
                 sim_dt: float = 0.01, command_hz: float = 20.0,
                 initial_state: DashboardState = INITIAL_STATE):
        self.scenario = scenario
        self.readings = readings or ReadingSet()
        self.gesture_cfg = gesture_cfg or GestureConfig()
        self.layout = layout or DashboardLayout()
        self.params = params or RobotParams()
        self.sim_dt = sim_dt
        self.command_every = max(int(round(1.0 / (command_hz * sim_dt))), 1)
        ws = scenario.workspace
        # One carrier per proxy, sharing the proxy's id (fixed 1:1 binding).
        self.fleet = Fleet(ws, scenario.buildings, dict(scenario.bindings),
                           scenario.viewport, params=self.params,
                           cfg=controller_cfg)
        self.engines = {
            proxy: GestureEngine(proxy, ws, self.gesture_cfg, self.layout,
                                 footprint=scenario.buildings[b].footprint)
            for proxy, b in sorted(scenario.bindings.items())
        }
        self.binding = dict(scenario.bindings)
        self.state = initial_state
        self.events: list[InteractionEvent] = []
        self.event_counts: dict[str, int] = {}
        self.config_hash = config_hash(scenario, self.gesture_cfg,
                                       self.params, sim_dt)
        self.trace = Trace(scenario.id, self.config_hash)
        self.script: list[tuple[int, Envelope]] = []
        self._script_idx = 0
        self._scripted_pose: dict[str, dict] = {}
        self._seq: dict[tuple[str, str], int] = {}
        self.now_ms = 0
        self.ticks = 0
        self.collision_count = 0
        self.boundary_violations = 0
        self.viewport_changes = 0

    # -- input scripting ---------------------------------------------------

    def feed(self, envelopes) -> None:
        """Queue input envelopes; may be called again mid-run with inputs
        that lie in the future (live drivers and fuzz harnesses do)."""
        for env in envelopes:
            if is_input(env):
                self.script.append((env.t_ms, env))
        tail = sorted(self.script[self._script_idx:], key=lambda e: e[0])
        self.script[self._script_idx:] = tail

    # -- envelope plumbing ---------------------------------------------------

    def _emit(self, role: str, sender: str, kind: str, payload: dict) -> None:
        key = (role, sender)
        self._seq[key] = self._seq.get(key, 0) + 1
        env = Envelope(t_ms=self.now_ms, seq=self._seq[key], role=role,
                       sender=sender, kind=kind, payload=payload)
        self.trace.append(self.now_ms, env)

    def _apply_script(self) -> None:
        while (self._script_idx < len(self.script)
               and self.script[self._script_idx][0] <= self.now_ms):
            t_ms, env = self.script[self._script_idx]
            self._script_idx += 1
            self.trace.append(self.now_ms, env)
            if env.kind == "viewport_change":
                vp = env.payload
                self.fleet.set_viewport(MapViewport(
                    center_lat=vp["center"][0], center_lon=vp["center"][1],
                    zoom_level=vp["zoom_level"],
                    rotation=vp.get("rotation", 0.0)))
                self.viewport_changes += 1
            elif env.kind == "pose_update":
                self._scripted_pose[env.payload["proxy"]] = env.payload

    def _proxy_pose(self, proxy: str) -> TablePose:
        # Once a proxy has been script-driven it stays so: a placed-down
        # script pose is inert (z = 0, constant), while the carrier drives
        # the physical proxy home underneath it.
        p = self._scripted_pose.get(proxy)
        if p is not None:
            return TablePose(x=p["x"], y=p["y"], z=p["z"], yaw=p["yaw"],
                             pitch=p.get("pitch", 0.0),
                             roll=p.get("roll", 0.0), t_ms=self.now_ms)
        robot = self.fleet.robot_by_id(proxy)
        x, y, yaw = robot.pose
        return TablePose(x=x, y=y, z=0.0, yaw=yaw, pitch=0.0, roll=0.0,
                         t_ms=self.now_ms)

    def _handle_event(self, ev: InteractionEvent, pose: TablePose) -> None:
        self.events.append(ev)
        self.event_counts[ev.kind.value] = self.event_counts.get(ev.kind.value, 0) + 1
        if ev.kind is EventKind.PICKED_UP:
            self.fleet.hold(ev.proxy)
        elif ev.kind is EventKind.PLACED_DOWN:
            self.fleet.release(ev.proxy, pose.x, pose.y, pose.yaw)
        self.state, effects = reduce(self.state, ev, self.binding)
        self._emit("controller", "sim", "interaction_event", ev.to_dict())
        if effects:
            self._emit("controller", "sim", "effects",
                       {"effects": [e.to_dict() for e in effects]})
        self._emit("controller", "sim", "state_delta",
                   {"state": state_to_dict(self.state)})

    # -- the tick ------------------------------------------------------------

    def tick(self) -> None:
        self.now_ms += int(round(self.sim_dt * 1000))
        self.ticks += 1
        self._apply_script()

        for proxy, engine in self.engines.items():
            pose = self._proxy_pose(proxy)
            for ev in engine.ingest(pose):
                self._handle_event(ev, pose)
            if engine.held:
                self.state = with_shadow(self.state, proxy, engine.shadow(pose))

        commands = self.fleet.tick(self.now_ms / 1000.0, self.sim_dt)

        if self.ticks % self.command_every == 0:
            for rid, vl, vr in commands:
                self._emit("controller", "sim", "wheel_command",
                           {"robot": rid, "v_left": vl, "v_right": vr})
            for robot in self.fleet.robots:
                if robot.mode is not Mode.HELD:
                    x, y, yaw = robot.pose
                    self._emit("controller", "sim", "pose_update",
                               {"proxy": robot.id, "x": x, "y": y, "z": 0.0,
                                "yaw": yaw, "pitch": 0.0, "roll": 0.0})

        self._check_safety()

    def _check_safety(self) -> None:
        floor = 2 * self.params.radius - 0.001
        ws = self.scenario.workspace
        robots = [r for r in self.fleet.robots if r.mode is not Mode.HELD]
        for i, robot in enumerate(robots):
            if not ws.contains(robot.pose[0], robot.pose[1], ws.safety_margin):
                self.boundary_violations += 1
            for j in range(i + 1, len(robots)):
                dx = robot.pose[0] - robots[j].pose[0]
                dy = robot.pose[1] - robots[j].pose[1]
                if dx * dx + dy * dy < floor * floor:
                    self.collision_count += 1

    def run(self, duration_s: float) -> Metrics:
        total_ticks = int(round(duration_s / self.sim_dt))
        for _ in range(total_ticks):
            self.tick()
        return self.metrics()

    def metrics(self) -> Metrics:
        violations = []
        if self.boundary_violations:
            violations.append(f"boundary violations: {self.boundary_violations}")
        if self.collision_count:
            violations.append(f"collisions: {self.collision_count}")
        return Metrics(
            duration_s=self.now_ms / 1000.0,
            ticks=self.ticks,
            collision_count=self.collision_count,
            boundary_violations=self.boundary_violations,
            path_length={r.id: round(r.odometry, 6) for r in self.fleet.robots},
            replan_count={r.id: r.replans for r in self.fleet.robots},
            event_counts=dict(sorted(self.event_counts.items())),
            final_state_hash=state_hash(self.state),
            robot_poses={r.id: r.pose for r in self.fleet.robots},
            settled=self.fleet.all_settled(),
            violations=violations,
        )

    def render_model(self) -> RenderModel:
        return snapshot(self.state, self.readings, self.scenario.buildings)


def replay_session(scenario: Scenario, trace: Trace,
                   readings: ReadingSet | None = None,
                   duration_s: float | None = None, **session_kwargs) -> Session:
    """Rebuild a session from a recorded trace's input envelopes and run it
    for the recorded duration (or an explicit one)."""
    session = Session(scenario, readings=readings, **session_kwargs)
    inputs = [env for _, env in trace.entries if is_input(env)]
    session.feed(inputs)
    if duration_s is None:
        duration_s = (trace.entries[-1][0] / 1000.0) if trace.entries else 0.0
    session.run(duration_s)
    return session


# -- render model serialization (UI snapshot wire form) ----------------------

def chart_data_to_dict(cd: ChartData) -> dict:
    return {
        "chart": cd.chart.key(),
        "period": cd.period,
        "series": [{"building": b, "buckets": [[label, value]
                                               for label, value in buckets]}
                   for b, buckets in cd.series],
        "histogram": ([[lo, hi, n] for lo, hi, n in cd.histogram]
                      if cd.histogram is not None else None),
    }


def render_model_to_dict(rm: RenderModel) -> dict:
    return {
        "charts": [chart_data_to_dict(c) for c in rm.charts],
        "legend": [{"building": e.building, "name": e.name, "color": e.color,
                    "highlighted": e.highlighted} for e in rm.legend],
        "shoebox": [{"building": b, "charts": [c.key() for c in cs]}
                    for b, cs in rm.shoebox],
        "shadows": [{"proxy": p,
                     "screen_point": list(s.screen_point) if s else None,
                     "magnifier_scale": s.magnifier_scale if s else None,
                     "footprint": [list(v) for v in s.footprint] if s else []}
                    for p, s in rm.shadows],
        "locked": rm.locked,
        "secondary": rm.secondary.key() if rm.secondary else None,
        "highlight": rm.highlight.key() if rm.highlight else None,
    }
