"""Deterministic fixture generation: scenarios, synthetic readings,
scripted task traces and the randomized stress driver.

Everything here is seeded; identical seeds produce identical bytes,
which is what lets the replay and determinism suites pin golden files.
"""

from __future__ import annotations

import math
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .charts import ChartId, Granularity
from .dataset import Attribute, Reading, ReadingSet, write_readings
from .gestures import DashboardLayout, GestureConfig
from .geometry import EARTH_RADIUS_M, MapViewport, Workspace
from .hub import Envelope, Trace
from .scenario import Building, Scenario
from .session import Session

CAMPUS_CENTER = (47.6550, -122.3035)
DEFAULT_ZOOM = 900.0  # ground meters per table meter

# (east, north) ground-meter anchor offsets; pairwise > 280 m so the
# carriers park far enough apart at the default zoom to leave navigable
# corridors between their reserved footprints.
_ANCHOR_OFFSETS = [(-315.0, -148.5), (-117.0, 139.5), (27.0, -148.5),
                   (279.0, 139.5), (333.0, -139.5)]
_NAMES = ["Library", "Sports Hall", "Lecture Centre", "Laboratories",
          "Student Union"]
_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"]
_FOOTPRINTS = [
    ((0.0, 0.0), (30.0, 0.0), (30.0, 18.0), (0.0, 18.0)),
    ((0.0, 0.0), (24.0, 0.0), (24.0, 24.0), (0.0, 24.0)),
    ((0.0, 0.0), (36.0, 0.0), (36.0, 12.0), (18.0, 12.0), (18.0, 24.0), (0.0, 24.0)),
    ((0.0, 0.0), (20.0, 0.0), (28.0, 14.0), (10.0, 26.0), (-4.0, 12.0)),
    ((0.0, 0.0), (26.0, 0.0), (26.0, 10.0), (34.0, 10.0), (34.0, 20.0), (0.0, 20.0)),
]


def _offset_to_geo(east: float, north: float,
                   center=CAMPUS_CENTER) -> tuple[float, float]:
    lat0 = math.radians(center[0])
    lat = center[0] + math.degrees(north / EARTH_RADIUS_M)
    lon = center[1] + math.degrees(east / (EARTH_RADIUS_M * math.cos(lat0)))
    return (lat, lon)


def default_scenario(n_buildings: int = 5, dataset_path: str | None = None,
                     scenario_id: str = "campus-default") -> Scenario:
    n = min(max(n_buildings, 1), len(_ANCHOR_OFFSETS))
    buildings = {}
    bindings = {}
    for k in range(n):
        bid = f"B{k + 1}"
        buildings[bid] = Building(
            id=bid, name=_NAMES[k], color=_COLORS[k],
            footprint=_FOOTPRINTS[k],
            geo_anchor=_offset_to_geo(*_ANCHOR_OFFSETS[k]),
            home_yaw=0.25 * k,
        )
        bindings[f"P{k + 1}"] = bid
    return Scenario(
        id=scenario_id,
        workspace=Workspace(),
        buildings=buildings,
        viewport=MapViewport(center_lat=CAMPUS_CENTER[0],
                             center_lon=CAMPUS_CENTER[1],
                             zoom_level=DEFAULT_ZOOM),
        dataset_path=dataset_path,
        bindings=bindings,
    )


# -- synthetic readings ------------------------------------------------------

_BASE_LEVEL = {Attribute.ELECTRICITY: 420.0, Attribute.EMISSION: 95.0,
               Attribute.WATER: 2600.0}


def gen_readings(buildings: list[str], start: datetime | None = None,
                 end: datetime | None = None, cadence_hours: int = 24,
                 seed: int = 0) -> ReadingSet:
    """Plausible consumption curves: seasonal + weekday structure + noise."""
    start = start or datetime(2016, 1, 1, tzinfo=timezone.utc)
    end = end or datetime(2017, 12, 31, tzinfo=timezone.utc)
    rng = random.Random(seed)
    scale = {b: 0.6 + 0.25 * i for i, b in enumerate(sorted(buildings))}
    readings = []
    for building in sorted(buildings):
        for attribute in Attribute:
            t = start
            phase = rng.uniform(0, 2 * math.pi)
            while t <= end:
                doy = t.timetuple().tm_yday
                season = 1.0 + 0.3 * math.sin(2 * math.pi * doy / 365.0 + phase)
                weekday = 1.0 if t.isoweekday() <= 5 else 0.72
                noise = 1.0 + rng.uniform(-0.08, 0.08)
                value = _BASE_LEVEL[attribute] * scale[building] * season * weekday * noise
                readings.append(Reading(building, attribute, t, max(value, 0.0)))
                t += timedelta(hours=cadence_hours)
    return ReadingSet(readings)


def write_readings_csv(path: str | Path, readings: ReadingSet) -> int:
    with open(path, "w", encoding="utf-8") as f:
        return write_readings(f, readings)


# -- scripted pose traces ----------------------------------------------------

def hover_position(ws: Workspace, u: float, backdrop_distance: float,
                   ) -> tuple[float, float]:
    """Table (x, y) whose shadow lands at horizontal parameter u, at the
    given distance from the backdrop plane."""
    d = backdrop_distance
    if ws.backdrop_edge == "north":
        return (u * ws.width, ws.height - d)
    if ws.backdrop_edge == "south":
        return ((1.0 - u) * ws.width, d)
    if ws.backdrop_edge == "east":
        return (ws.width - d, (1.0 - u) * ws.height)
    return (d, u * ws.height)


def z_for_screen_v(cfg: GestureConfig, v: float) -> float:
    return cfg.shadow_z_low + (1.0 - v) * (cfg.shadow_z_high - cfg.shadow_z_low)


class ScriptBuilder:
    """Builds a tracker pose-update envelope stream for one hand."""

    def __init__(self, scenario: Scenario, cfg: GestureConfig | None = None,
                 layout: DashboardLayout | None = None, rate_hz: int = 50,
                 start_ms: int = 500):
        self.scenario = scenario
        self.cfg = cfg or GestureConfig()
        self.layout = layout or DashboardLayout()
        self.step_ms = int(1000 / rate_hz)
        self.t = start_ms
        self.envelopes: list[Envelope] = []
        self._seq = 0
        self._pose: dict[str, list[float]] = {}  # proxy -> [x,y,z,yaw,pitch,roll]

    def _sample(self, proxy: str) -> None:
        x, y, z, yaw, pitch, roll = self._pose[proxy]
        self._seq += 1
        self.envelopes.append(Envelope(
            t_ms=self.t, seq=self._seq, role="tracker", sender="script",
            kind="pose_update",
            payload={"proxy": proxy, "x": x, "y": y, "z": z, "yaw": yaw,
                     "pitch": pitch, "roll": roll}))
        self.t += self.step_ms

    def begin(self, proxy: str, x: float, y: float, yaw: float = 0.0) -> None:
        self._pose[proxy] = [x, y, 0.0, yaw, 0.0, 0.0]
        self._sample(proxy)

    def ramp(self, proxy: str, duration_ms: int, **targets: float) -> None:
        """Linearly move selected pose fields over the duration."""
        names = ["x", "y", "z", "yaw", "pitch", "roll"]
        pose = self._pose[proxy]
        start = list(pose)
        goal = list(pose)
        for key, value in targets.items():
            goal[names.index(key)] = value
        steps = max(duration_ms // self.step_ms, 1)
        for k in range(1, steps + 1):
            f = k / steps
            for i in range(6):
                pose[i] = start[i] + (goal[i] - start[i]) * f
            self._sample(proxy)

    def hold(self, proxy: str, duration_ms: int) -> None:
        for _ in range(max(duration_ms // self.step_ms, 1)):
            self._sample(proxy)

    def viewport_change(self, viewport: MapViewport) -> None:
        self._seq += 1
        self.envelopes.append(Envelope(
            t_ms=self.t, seq=self._seq, role="tabletop", sender="script",
            kind="viewport_change",
            payload={"center": [viewport.center_lat, viewport.center_lon],
                     "zoom_level": viewport.zoom_level,
                     "rotation": viewport.rotation}))
        self.t += self.step_ms

    # -- composite gestures -------------------------------------------------

    def pick_up(self, proxy: str, hover_z: float = 0.1) -> None:
        self.ramp(proxy, 300, z=hover_z)

    def place_down(self, proxy: str) -> None:
        self.ramp(proxy, 300, z=0.0)

    def move_over_chart(self, proxy: str, chart: ChartId,
                        backdrop_distance: float = 0.15,
                        duration_ms: int = 500) -> None:
        u, v = self.layout.cell_center(chart)
        x, y = hover_position(self.scenario.workspace, u, backdrop_distance)
        self.ramp(proxy, duration_ms, x=x, y=y, z=z_for_screen_v(self.cfg, v))

    def move_over_shoebox(self, proxy: str, u: float = 0.5,
                          backdrop_distance: float = 0.15) -> None:
        v = (self.layout.shoebox_v_min + 1.0) / 2.0
        x, y = hover_position(self.scenario.workspace, u, backdrop_distance)
        self.ramp(proxy, 500, x=x, y=y, z=z_for_screen_v(self.cfg, v))

    def dwell(self, proxy: str) -> None:
        self.hold(proxy, self.cfg.dwell_ms + 250)

    def pitch_flip(self, proxy: str) -> None:
        limit = math.radians(self.cfg.pitch_deg)
        self.ramp(proxy, 250, pitch=limit + math.radians(10))
        self.ramp(proxy, 250, pitch=0.0)

    def rotate(self, proxy: str, degrees: float) -> None:
        """Positive degrees rotate counterclockwise (math yaw)."""
        pose = self._pose[proxy]
        self.ramp(proxy, 600, yaw=pose[3] + math.radians(degrees))

    def trace(self, scenario_id: str | None = None,
              config_hash: str = "") -> Trace:
        tr = Trace(scenario_id or self.scenario.id, config_hash)
        for env in self.envelopes:
            tr.append(env.t_ms, env)
        return tr


def _park_position(scenario: Scenario, proxy: str) -> tuple[float, float, float]:
    from .robots import OccupancyGrid, RobotParams, assign_target

    params = RobotParams()
    grid = OccupancyGrid.from_workspace(scenario.workspace,
                                        inflation=params.radius + 0.01)
    b = scenario.building_of(proxy)
    return assign_target(b, scenario.viewport, scenario.workspace, grid)


TASK_NAMES = ("bm", "dr", "rd", "dr_s")


def task_script(name: str, scenario: Scenario,
                cfg: GestureConfig | None = None,
                layout: DashboardLayout | None = None) -> Trace:
    """The four scripted task shapes, as input envelope traces.

    bm    bookmark three charts for one building (pitch flips);
    dr    select a chart, open its secondary layer, keep the filter;
    rd    filter by building, then dwell a chart into the secondary layer;
    dr_s  like dr plus a map navigation (viewport change) while holding.
    """
    cfg = cfg or GestureConfig()
    layout = layout or DashboardLayout()
    sb = ScriptBuilder(scenario, cfg, layout)
    name = name.lower().replace("-", "_")

    if name == "bm":
        proxy = "P2"
        x, y, yaw = _park_position(scenario, proxy)
        sb.begin(proxy, x, y, yaw)
        sb.pick_up(proxy)
        for chart in (ChartId(Attribute.ELECTRICITY, Granularity.YEARLY),
                      ChartId(Attribute.EMISSION, Granularity.MONTHLY),
                      ChartId(Attribute.WATER, Granularity.WEEKLY)):
            sb.move_over_chart(proxy, chart)
            sb.pitch_flip(proxy)
        sb.place_down(proxy)
    elif name == "dr":
        proxy = "P3"
        x, y, yaw = _park_position(scenario, proxy)
        sb.begin(proxy, x, y, yaw)
        sb.pick_up(proxy)
        sb.move_over_chart(proxy, ChartId(Attribute.EMISSION, Granularity.MONTHLY))
        sb.dwell(proxy)
        sb.hold(proxy, 400)
    elif name == "rd":
        proxy = "P1"
        x, y, yaw = _park_position(scenario, proxy)
        sb.begin(proxy, x, y, yaw)
        sb.pick_up(proxy)
        sb.hold(proxy, 300)  # filtered view first, then seek the chart
        sb.move_over_chart(proxy, ChartId(Attribute.ELECTRICITY, Granularity.YEARLY))
        sb.dwell(proxy)
        sb.hold(proxy, 400)
    elif name == "dr_s":
        proxy = "P4"
        x, y, yaw = _park_position(scenario, proxy)
        sb.begin(proxy, x, y, yaw)
        sb.pick_up(proxy)
        sb.move_over_chart(proxy, ChartId(Attribute.WATER, Granularity.WEEKLY))
        sb.dwell(proxy)
        vp = scenario.viewport
        sb.viewport_change(MapViewport(center_lat=vp.center_lat + 40.0 / 111_000.0,
                                       center_lon=vp.center_lon,
                                       zoom_level=vp.zoom_level,
                                       rotation=vp.rotation))
        sb.hold(proxy, 600)
    else:
        raise ValueError(f"unknown task {name!r}, expected one of {TASK_NAMES}")
    return sb.trace()


# -- noisy recognizer traces -------------------------------------------------

def noisy_z_trace(seed: int, n_samples: int = 400, in_band_only: bool = False,
                  cfg: GestureConfig | None = None, ws: Workspace | None = None,
                  ) -> list:
    """Seeded pose stream for recognizer fuzzing.

    in_band_only confines z to the open hysteresis band, which must
    produce no events at all.
    """
    from .geometry import TablePose

    cfg = cfg or GestureConfig()
    ws = ws or Workspace()
    rng = random.Random(seed)
    band_lo, band_hi = cfg.place_z, cfg.pickup_z
    samples = []
    t = 0
    x, y = ws.width / 2, ws.height / 2
    yaw = rng.uniform(-math.pi, math.pi)
    for k in range(n_samples):
        t += 20
        phase = 2 * math.pi * k / 160.0
        if in_band_only:
            mid = (band_lo + band_hi) / 2
            amp = (band_hi - band_lo) * 0.35
            z = mid + amp * math.sin(phase) + rng.uniform(-0.0008, 0.0008)
            z = min(max(z, band_lo + 1e-4), band_hi - 1e-4)
        else:
            z = max(0.026 + 0.03 * math.sin(phase) + rng.uniform(-0.004, 0.004), 0.0)
        x = min(max(x + rng.uniform(-0.004, 0.004), 0.0), ws.width)
        y = min(max(y + rng.uniform(-0.004, 0.004), 0.0), ws.height)
        yaw += rng.uniform(-0.05, 0.05)
        pitch = rng.uniform(-0.2, 0.2)
        samples.append(TablePose(x=x, y=y, z=z, yaw=yaw, pitch=pitch,
                                 roll=0.0, t_ms=t))
    return samples


# -- randomized stress driver ------------------------------------------------

class FuzzDriver:
    """Random pickups, carries, placements and map changes, generated live
    against the running session so nothing is ever dropped onto a robot."""

    def __init__(self, session: Session, seed: int, n_ticks: int,
                 n_disturbances: int = 8):
        self.session = session
        self.rng = random.Random(seed)
        self.n_ticks = n_ticks
        horizon = int(n_ticks * 0.6)
        population = range(200, max(horizon, 201))
        self.decision_ticks = sorted(self.rng.sample(
            population, min(n_disturbances, len(population))))
        self.bursts: dict[str, dict] = {}
        self._seq = 0
        self.viewports = self._valid_viewports()
        self.tick_i = 0

    def _valid_viewports(self) -> list[MapViewport]:
        from .robots import OccupancyGrid, RobotParams, TargetError, assign_target

        sc = self.session.scenario
        params = RobotParams()
        grid = OccupancyGrid.from_workspace(sc.workspace,
                                            inflation=params.radius + 0.01)
        pool = [sc.viewport]
        attempts = 0
        while len(pool) < 6 and attempts < 200:
            attempts += 1
            vp = MapViewport(
                center_lat=sc.viewport.center_lat + self.rng.uniform(-30, 30) / 111_000.0,
                center_lon=sc.viewport.center_lon + self.rng.uniform(-30, 30) / 78_000.0,
                zoom_level=sc.viewport.zoom_level * self.rng.uniform(0.9, 1.15),
                rotation=self.rng.uniform(-0.15, 0.15))
            try:
                targets = [assign_target(b, vp, sc.workspace, grid)
                           for b in sc.buildings.values()]
            except TargetError:
                continue
            ok = all(math.dist(a[:2], b[:2]) >= 0.18
                     for i, a in enumerate(targets) for b in targets[i + 1:])
            if ok:
                pool.append(vp)
        return pool

    def _feed_pose(self, proxy: str, x, y, z, yaw) -> None:
        self._seq += 1
        self.session.feed([Envelope(
            t_ms=self.session.now_ms + 10, seq=self._seq, role="tracker",
            sender="fuzz", kind="pose_update",
            payload={"proxy": proxy, "x": x, "y": y, "z": z, "yaw": yaw,
                     "pitch": 0.0, "roll": 0.0})])

    def _free_spot(self) -> tuple[float, float] | None:
        from .robots import Mode

        sc = self.session.scenario
        ws = sc.workspace
        grid = self.session.fleet.grid
        obstacles = [r.pose[:2] for r in self.session.fleet.robots
                     if r.mode is not Mode.HELD]
        # Stay off every park target too: a carrier will end up there.
        obstacles += [r.target[:2] for r in self.session.fleet.robots
                      if r.target is not None]
        obstacles += [b["dest"] for b in self.bursts.values() if b.get("dest")]
        for _ in range(60):
            x = self.rng.uniform(0.14, ws.width - 0.14)
            y = self.rng.uniform(0.14, ws.height - 0.14)
            if not grid.is_free(*grid.cell_of(x, y)):
                continue
            if all(math.dist((x, y), o) >= 0.2 for o in obstacles):
                return (x, y)
        return None

    def _start_burst(self) -> None:
        from .robots import Mode

        candidates = [r.id for r in self.session.fleet.robots
                      if r.mode is not Mode.HELD and r.id not in self.bursts]
        if not candidates:
            return
        proxy = self.rng.choice(candidates)
        dest = self._free_spot()
        if dest is None:
            return
        robot = self.session.fleet.robot_by_id(proxy)
        x, y, yaw = robot.pose
        carry_ticks = self.rng.randint(80, 150)
        self.bursts[proxy] = {
            "stage": "raise", "k": 0, "pos": [x, y, 0.0], "yaw": yaw,
            "dest": dest, "carry_ticks": carry_ticks, "start": (x, y),
            "clear_wait": 0,
        }

    def step(self) -> None:
        """Call once before each session tick."""
        if self.decision_ticks and self.tick_i == self.decision_ticks[0]:
            self.decision_ticks.pop(0)
            if self.viewports and self.rng.random() < 0.3:
                vp = self.rng.choice(self.viewports)
                self._seq += 1
                self.session.feed([Envelope(
                    t_ms=self.session.now_ms + 10, seq=self._seq,
                    role="tabletop", sender="fuzz", kind="viewport_change",
                    payload={"center": [vp.center_lat, vp.center_lon],
                             "zoom_level": vp.zoom_level,
                             "rotation": vp.rotation})])
            else:
                self._start_burst()
        self._advance_bursts()
        self.tick_i += 1

    def _advance_bursts(self) -> None:
        from .robots import Mode

        done = []
        for proxy, burst in self.bursts.items():
            pos = burst["pos"]
            stage = burst["stage"]
            burst["k"] += 1
            if stage == "raise":
                pos[2] = min(pos[2] + 0.004, 0.1)
                if pos[2] >= 0.1:
                    burst["stage"] = "carry"
                    burst["k"] = 0
            elif stage == "carry":
                f = min(burst["k"] / burst["carry_ticks"], 1.0)
                sx, sy = burst["start"]
                dx, dy = burst["dest"]
                pos[0] = sx + (dx - sx) * f
                pos[1] = sy + (dy - sy) * f
                if f >= 1.0:
                    burst["stage"] = "wait_clear"
            elif stage == "wait_clear":
                clear = all(
                    math.dist(burst["dest"], r.pose[:2]) >= 0.18
                    for r in self.session.fleet.robots
                    if r.mode is not Mode.HELD and r.id != proxy)
                burst["clear_wait"] += 1
                if clear:
                    burst["stage"] = "drop"
                elif burst["clear_wait"] > 400:
                    # Somebody is lingering; carry to a fresh spot instead.
                    fresh = self._free_spot()
                    if fresh is not None:
                        burst.update(stage="carry", k=0, start=tuple(pos[:2]),
                                     dest=fresh, carry_ticks=100, clear_wait=0)
            elif stage == "drop":
                pos[2] = max(pos[2] - 0.004, 0.0)
                if pos[2] <= 0.0:
                    done.append(proxy)
            self._feed_pose(proxy, pos[0], pos[1], pos[2], burst["yaw"])
        for proxy in done:
            self.bursts.pop(proxy)


def run_fuzz(seed: int, n_ticks: int = 10_000, n_disturbances: int = 8,
             scenario: Scenario | None = None):
    """One seeded stress run; returns the session metrics."""
    scenario = scenario or default_scenario()
    session = Session(scenario)
    driver = FuzzDriver(session, seed, n_ticks, n_disturbances)
    for _ in range(n_ticks):
        driver.step()
        session.tick()
    return session.metrics()
