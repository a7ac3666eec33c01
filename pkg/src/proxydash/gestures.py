"""Turns per-proxy 6-DoF pose streams into discrete interaction events.

One recognizer instance per proxy.  All recognition is a pure state
machine over the sample stream: identical streams and config produce
bit-identical event streams, which is what makes record/replay testing
possible.

Mechanics:
  * pickup/place uses a z hysteresis pair (pickup_z above place_z), so a
    trajectory confined to the band between them never emits anything;
  * proximity enter/leave compares backdrop distance to backdrop_near_m
    while the proxy is held;
  * dwell selection fires once per continuous stay of the shadow over a
    single chart cell;
  * rotation accumulates unwrapped signed yaw inside a sliding window;
    clockwise (negative mathematical yaw, seen from above) locks,
    counterclockwise unlocks;
  * a pitch crossing beyond pitch_deg fires at whatever the shadow
    currently targets (chart cell or shoebox strip).

Every event kind is debounced independently.  Rotation, pitch, dwell and
proximity are only recognized while the proxy is held; the carrier robot
rotates the proxy all the time while driving, and those motions must
never register as gestures.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable

from .charts import ATTRIBUTE_ROWS, GRANULARITY_COLS, ChartId
from .geometry import TablePose, Workspace, wrap_angle


class GestureError(ValueError):
    pass


class StaleSampleError(GestureError):
    """A pose sample whose timestamp does not advance the stream."""


@dataclass(frozen=True)
class GestureConfig:
    pickup_z: float = 0.03          # m, rising threshold
    place_z: float = 0.015          # m, falling threshold (hysteresis pair)
    dwell_ms: int = 800
    backdrop_near_m: float = 0.35
    rotate_deg: float = 60.0        # cumulative yaw within the window
    rotate_window_ms: int = 1500
    pitch_deg: float = 35.0
    debounce_ms: int = 150
    # Affine z -> screen-vertical map for the shadow; both ends clamped.
    shadow_z_low: float = 0.05      # z at the bottom of the dashboard (v = 1)
    shadow_z_high: float = 0.45     # z at the top of the dashboard (v = 0)
    magnifier_max: float = 4.0

    def __post_init__(self) -> None:
        if not (self.pickup_z > self.place_z > 0):
            raise GestureError("need pickup_z > place_z > 0")
        for name in ("dwell_ms", "rotate_window_ms", "debounce_ms"):
            if not getattr(self, name) > 0:
                raise GestureError(f"{name} must be > 0")
        for name in ("rotate_deg", "pitch_deg"):
            if not 0 < getattr(self, name) < 90:
                raise GestureError(f"{name} must be in (0, 90)")
        if not self.shadow_z_high > self.shadow_z_low:
            raise GestureError("need shadow_z_high > shadow_z_low")


class EventKind(enum.Enum):
    PICKED_UP = "picked_up"
    PLACED_DOWN = "placed_down"
    ENTERED_PROXIMITY = "entered_proximity"
    LEFT_PROXIMITY = "left_proximity"
    DWELL_SELECT = "dwell_select"
    ROTATED_CW = "rotated_cw"
    ROTATED_CCW = "rotated_ccw"
    PITCH_AT_CHART = "pitch_at_chart"
    PITCH_AT_SHOEBOX = "pitch_at_shoebox"


@dataclass(frozen=True)
class InteractionEvent:
    kind: EventKind
    proxy: str
    t_ms: int
    chart: ChartId | None = None  # set for DWELL_SELECT / PITCH_AT_CHART

    def to_dict(self) -> dict:
        payload: dict = {}
        if self.chart is not None:
            payload["chart"] = self.chart.key()
        return {"t_ms": self.t_ms, "proxy": self.proxy,
                "event": self.kind.value, "payload": payload}

    @staticmethod
    def from_dict(doc: dict) -> "InteractionEvent":
        chart_key = doc.get("payload", {}).get("chart")
        return InteractionEvent(
            kind=EventKind(doc["event"]),
            proxy=doc["proxy"],
            t_ms=doc["t_ms"],
            chart=ChartId.from_key(chart_key) if chart_key else None,
        )


@dataclass(frozen=True)
class ShadowState:
    """On-dashboard projection of a held proxy."""

    proxy: str
    screen_point: tuple[float, float]  # normalized [0,1]^2, (0,0) top-left
    magnifier_scale: float
    footprint: tuple[tuple[float, float], ...] = ()


SHOEBOX = "shoebox"


@dataclass(frozen=True)
class DashboardLayout:
    """Normalized dashboard regions: the 3 x 4 chart grid, the legend band
    and the shoebox strip along the bottom."""

    rows: int = 3
    cols: int = 4
    charts_v_max: float = 0.78    # charts occupy v in [0, charts_v_max)
    shoebox_v_min: float = 0.86   # shoebox strip is v in [shoebox_v_min, 1]

    def chart_at(self, point: tuple[float, float]) -> ChartId | None:
        u, v = point
        if not (0.0 <= u <= 1.0 and 0.0 <= v < self.charts_v_max):
            return None
        col = min(int(u * self.cols), self.cols - 1)
        row = min(int(v / self.charts_v_max * self.rows), self.rows - 1)
        return ChartId(ATTRIBUTE_ROWS[row], GRANULARITY_COLS[col])

    def cell_center(self, chart: ChartId) -> tuple[float, float]:
        row = ATTRIBUTE_ROWS.index(chart.attribute)
        col = GRANULARITY_COLS.index(chart.granularity)
        return ((col + 0.5) / self.cols,
                (row + 0.5) * self.charts_v_max / self.rows)

    def region_at(self, point: tuple[float, float]):
        """ChartId, SHOEBOX or None for a normalized screen point."""
        u, v = point
        if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
            return None
        if v >= self.shoebox_v_min:
            return SHOEBOX
        return self.chart_at(point)


def shadow(pose: TablePose, ws: Workspace, cfg: GestureConfig,
           proxy: str = "", footprint: tuple = ()) -> ShadowState:
    """Project a held proxy onto the dashboard plane.

    Horizontal: perpendicular projection onto the backdrop edge.
    Vertical: affine in z, clamped (higher proxy -> higher on screen).
    The magnifier grows as the proxy approaches the backdrop, clamped to
    [1, magnifier_max].
    """
    u = ws.along_backdrop(pose.x, pose.y)
    span = cfg.shadow_z_high - cfg.shadow_z_low
    v = 1.0 - (pose.z - cfg.shadow_z_low) / span
    v = min(max(v, 0.0), 1.0)
    d = ws.backdrop_distance(pose.x, pose.y)
    scale = min(max(cfg.backdrop_near_m / max(d, 1e-9), 1.0), cfg.magnifier_max)
    return ShadowState(proxy, (u, v), scale, footprint)


def target_of(pose: TablePose, ws: Workspace, cfg: GestureConfig,
              layout: DashboardLayout):
    """Dashboard region under the proxy's shadow: ChartId, SHOEBOX or None."""
    return layout.region_at(shadow(pose, ws, cfg).screen_point)


class GestureEngine:
    """Recognizer for one proxy's pose stream."""

    def __init__(self, proxy: str, ws: Workspace, cfg: GestureConfig | None = None,
                 layout: DashboardLayout | None = None, footprint: tuple = ()):
        self.proxy = proxy
        self.ws = ws
        self.cfg = cfg or GestureConfig()
        self.layout = layout or DashboardLayout()
        self.footprint = footprint
        self.last_pose: TablePose | None = None
        self.held = False
        self.near = False
        self._yaw_cum = 0.0
        self._yaw_history: list[tuple[int, float]] = []  # (t_ms, cumulative yaw)
        self._dwell_target: ChartId | None = None
        self._dwell_since = 0
        self._dwell_fired = False
        self._pitch_armed = False
        self._last_emit: dict[EventKind, int] = {}

    # -- helpers ---------------------------------------------------------

    def _debounced(self, kind: EventKind, t: int) -> bool:
        last = self._last_emit.get(kind)
        return last is not None and t - last < self.cfg.debounce_ms

    def _emit(self, out: list[InteractionEvent], kind: EventKind, t: int,
              chart: ChartId | None = None) -> None:
        self._last_emit[kind] = t
        out.append(InteractionEvent(kind, self.proxy, t, chart))

    def _reset_held_state(self, pose: TablePose) -> None:
        self._yaw_cum = 0.0
        self._yaw_history = []
        self._dwell_target = None
        self._dwell_fired = False
        self._pitch_armed = abs(pose.pitch) < math.radians(self.cfg.pitch_deg)

    def shadow(self, pose: TablePose | None = None) -> ShadowState:
        p = pose or self.last_pose
        if p is None or not self.held:
            raise GestureError(f"proxy {self.proxy} is not held, no shadow")
        return shadow(p, self.ws, self.cfg, self.proxy, self.footprint)

    # -- the recognizer step ---------------------------------------------

    def ingest(self, pose: TablePose) -> list[InteractionEvent]:
        """Advance the state machine by one sample; returns emitted events."""
        cfg = self.cfg
        prev = self.last_pose
        if prev is not None and pose.t_ms <= prev.t_ms:
            raise StaleSampleError(
                f"proxy {self.proxy}: sample at {pose.t_ms} ms does not advance "
                f"the stream (last {prev.t_ms} ms)")
        t = pose.t_ms
        out: list[InteractionEvent] = []

        # Hysteresis pickup / place. Level triggered against the pair of
        # thresholds; the held flag only flips when the event is emitted,
        # which is what guarantees strict alternation.
        if not self.held and pose.z >= cfg.pickup_z:
            if not self._debounced(EventKind.PICKED_UP, t):
                self.held = True
                self._reset_held_state(pose)
                self._emit(out, EventKind.PICKED_UP, t)
        elif self.held and pose.z <= cfg.place_z:
            if not self._debounced(EventKind.PLACED_DOWN, t):
                if self.near:
                    self.near = False
                    self._emit(out, EventKind.LEFT_PROXIMITY, t)
                self.held = False
                self._dwell_target = None
                self._dwell_fired = False
                self._yaw_history = []
                self._emit(out, EventKind.PLACED_DOWN, t)

        if self.held:
            self._step_proximity(pose, out)
            self._step_rotation(pose, prev, out)
            point = shadow(pose, self.ws, cfg).screen_point
            self._step_dwell(point, t, out)
            self._step_pitch(pose, point, out)

        self.last_pose = pose
        return out

    def _step_proximity(self, pose: TablePose, out: list[InteractionEvent]) -> None:
        d = self.ws.backdrop_distance(pose.x, pose.y)
        near = d < self.cfg.backdrop_near_m
        if near and not self.near and not self._debounced(EventKind.ENTERED_PROXIMITY, pose.t_ms):
            self.near = True
            self._emit(out, EventKind.ENTERED_PROXIMITY, pose.t_ms)
        elif not near and self.near and not self._debounced(EventKind.LEFT_PROXIMITY, pose.t_ms):
            self.near = False
            self._emit(out, EventKind.LEFT_PROXIMITY, pose.t_ms)

    def _step_rotation(self, pose: TablePose, prev: TablePose | None,
                       out: list[InteractionEvent]) -> None:
        t = pose.t_ms
        if not self._yaw_history:
            # First held sample: anchor the window, nothing swept yet.
            self._yaw_cum = 0.0
            self._yaw_history.append((t, 0.0))
            return
        self._yaw_cum += wrap_angle(pose.yaw - prev.yaw)
        self._yaw_history.append((t, self._yaw_cum))
        horizon = t - self.cfg.rotate_window_ms
        while len(self._yaw_history) > 1 and self._yaw_history[0][0] < horizon:
            self._yaw_history.pop(0)
        swept = self._yaw_cum - self._yaw_history[0][1]
        limit = math.radians(self.cfg.rotate_deg)
        # Clockwise seen from above is negative mathematical yaw.
        if swept <= -limit and not self._debounced(EventKind.ROTATED_CW, t):
            self._emit(out, EventKind.ROTATED_CW, t)
            self._yaw_history = [(t, self._yaw_cum)]
        elif swept >= limit and not self._debounced(EventKind.ROTATED_CCW, t):
            self._emit(out, EventKind.ROTATED_CCW, t)
            self._yaw_history = [(t, self._yaw_cum)]

    def _step_dwell(self, point: tuple[float, float], t: int,
                    out: list[InteractionEvent]) -> None:
        target = self.layout.chart_at(point)
        if target != self._dwell_target:
            self._dwell_target = target
            self._dwell_since = t
            self._dwell_fired = False
            return
        if (target is not None and not self._dwell_fired
                and t - self._dwell_since >= self.cfg.dwell_ms
                and not self._debounced(EventKind.DWELL_SELECT, t)):
            self._dwell_fired = True
            self._emit(out, EventKind.DWELL_SELECT, t, chart=target)

    def _step_pitch(self, pose: TablePose, point: tuple[float, float],
                    out: list[InteractionEvent]) -> None:
        over = abs(pose.pitch) >= math.radians(self.cfg.pitch_deg)
        if not over:
            self._pitch_armed = True
            return
        if not self._pitch_armed:
            return
        # The crossing consumes the arm whether or not it lands on a target.
        self._pitch_armed = False
        region = self.layout.region_at(point)
        if region is None:
            return
        t = pose.t_ms
        if region == SHOEBOX:
            if not self._debounced(EventKind.PITCH_AT_SHOEBOX, t):
                self._emit(out, EventKind.PITCH_AT_SHOEBOX, t)
        elif not self._debounced(EventKind.PITCH_AT_CHART, t):
            self._emit(out, EventKind.PITCH_AT_CHART, t, chart=region)


# -- trace serialization (the golden-file substrate) ----------------------

def write_pose_trace(sink: IO[str], samples: Iterable[tuple[str, TablePose]]) -> int:
    n = 0
    for proxy, p in samples:
        sink.write(json.dumps({"proxy": proxy, "t_ms": p.t_ms, "x": p.x, "y": p.y,
                               "z": p.z, "yaw": p.yaw, "pitch": p.pitch,
                               "roll": p.roll}) + "\n")
        n += 1
    return n


def read_pose_trace(source: IO[str]) -> list[tuple[str, TablePose]]:
    samples = []
    for line in source:
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        samples.append((doc["proxy"], TablePose(
            x=doc["x"], y=doc["y"], z=doc["z"], yaw=doc["yaw"],
            pitch=doc["pitch"], roll=doc["roll"], t_ms=doc["t_ms"])))
    return samples


def write_event_log(sink: IO[str], events: Iterable[InteractionEvent]) -> int:
    n = 0
    for ev in events:
        sink.write(json.dumps(ev.to_dict()) + "\n")
        n += 1
    return n


def read_event_log(source: IO[str]) -> list[InteractionEvent]:
    return [InteractionEvent.from_dict(json.loads(line))
            for line in source if line.strip()]
