"""The dashboard state machine: interaction events in, state + render hints out.

``reduce`` is a pure function: the same (state, event) pair always yields
the same (state', effects).  Effects are render hints only; replaying an
event history while discarding every effect reconstructs the same state.

Transition summary:
  * picking a proxy up adds its building to the filter, placing it down
    removes it (empty filter restores the overview);
  * a dwell selection on a trend chart opens the secondary layer for it;
  * leaving the backdrop proximity reverts to the primary layer unless
    the dashboard is locked;
  * rotating clockwise locks the secondary layer in place, rotating any
    held proxy counterclockwise unlocks (and reverts if nothing is still
    in proximity);
  * pitching at a trend chart bookmarks it in the building's shoebox
    (idempotent, ordered); distribution charts are never stored;
  * pitching at the shoebox asks the UI to show that building's entries.

Anything else is an explicit no-op.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

from .charts import ChartData, ChartId, Granularity, CHART_UNIVERSE, aggregate, drill_down
from .dataset import ReadingSet
from .gestures import EventKind, InteractionEvent, ShadowState
from .scenario import Building


class ReducerError(ValueError):
    pass


class UnboundProxyError(ReducerError):
    def __init__(self, proxy: str):
        super().__init__(f"proxy {proxy!r} is not bound to a building")
        self.proxy = proxy


class ReplayError(ReducerError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"event {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class DashboardState:
    """Single reducible state of the visualization.

    filter and shoebox entries keep insertion order; secondary is the
    drill-down parent chart (None on the primary layer); near tracks
    which held proxies are inside the backdrop threshold, which the
    unlock rule needs.
    """

    filter: tuple[str, ...] = ()
    secondary: ChartId | None = None
    locked: bool = False
    shoebox: tuple[tuple[str, tuple[ChartId, ...]], ...] = ()
    shadows: tuple[tuple[str, ShadowState | None], ...] = ()
    highlight: ChartId | None = None
    near: tuple[str, ...] = ()

    def shoebox_map(self) -> dict[str, tuple[ChartId, ...]]:
        return dict(self.shoebox)

    def shadow_map(self) -> dict[str, ShadowState | None]:
        return dict(self.shadows)


INITIAL_STATE = DashboardState()


class EffectKind(enum.Enum):
    REFRESH_CHARTS = "refresh_charts"
    HIGHLIGHT_CHART = "highlight_chart"
    DIM_NON_SELECTED = "dim_non_selected"
    SHOEBOX_FLY = "shoebox_fly"
    SHOEBOX_BADGE = "shoebox_badge"
    SHOW_SHOEBOX_FOR = "show_shoebox_for"
    LOCK_ICON = "lock_icon"
    LEGEND_HIGHLIGHT = "legend_highlight"


@dataclass(frozen=True)
class Effect:
    kind: EffectKind
    chart: ChartId | None = None
    building: str | None = None
    buildings: tuple[str, ...] = ()
    flag: bool = False  # flip_hint for HIGHLIGHT_CHART, state for LOCK_ICON

    def to_dict(self) -> dict:
        d: dict = {"effect": self.kind.value}
        if self.chart is not None:
            d["chart"] = self.chart.key()
        if self.building is not None:
            d["building"] = self.building
        if self.buildings:
            d["buildings"] = list(self.buildings)
        if self.kind in (EffectKind.HIGHLIGHT_CHART, EffectKind.LOCK_ICON):
            d["flag"] = self.flag
        return d


def _without(items: tuple, value) -> tuple:
    return tuple(x for x in items if x != value)


def _shoebox_add(shoebox: tuple, building: str, chart: ChartId) -> tuple:
    entries = dict(shoebox)
    charts = entries.get(building, ())
    if chart in charts:
        return shoebox  # idempotent
    entries[building] = charts + (chart,)
    if building not in dict(shoebox):
        return shoebox + ((building, entries[building]),)
    return tuple((b, entries[b]) for b, _ in shoebox)


def reduce(state: DashboardState, event: InteractionEvent,
           binding: Mapping[str, str]) -> tuple[DashboardState, list[Effect]]:
    """Apply one interaction event; returns the next state and render hints."""
    if event.proxy not in binding:
        raise UnboundProxyError(event.proxy)
    building = binding[event.proxy]
    kind = event.kind

    if kind is EventKind.PICKED_UP:
        new_filter = state.filter if building in state.filter else state.filter + (building,)
        shadows = state.shadows
        if event.proxy not in dict(shadows):
            shadows = shadows + ((event.proxy, None),)
        new = replace(state, filter=new_filter, shadows=shadows)
        return new, [Effect(EffectKind.DIM_NON_SELECTED),
                     Effect(EffectKind.LEGEND_HIGHLIGHT, buildings=new_filter)]

    if kind is EventKind.PLACED_DOWN:
        new_filter = _without(state.filter, building)
        shadows = tuple((p, s) for p, s in state.shadows if p != event.proxy)
        near = _without(state.near, event.proxy)
        new = replace(state, filter=new_filter, shadows=shadows, near=near)
        effects = [Effect(EffectKind.LEGEND_HIGHLIGHT, buildings=new_filter)]
        if not new_filter:
            if not new.locked:
                new = replace(new, secondary=None, highlight=None)
            effects.append(Effect(EffectKind.REFRESH_CHARTS))
        return new, effects

    if kind is EventKind.ENTERED_PROXIMITY:
        if event.proxy in state.near:
            return state, []
        return replace(state, near=state.near + (event.proxy,)), []

    if kind is EventKind.LEFT_PROXIMITY:
        near = _without(state.near, event.proxy)
        new = replace(state, near=near)
        if not state.locked and state.secondary is not None:
            new = replace(new, secondary=None, highlight=None)
            return new, [Effect(EffectKind.REFRESH_CHARTS)]
        return new, []

    if kind is EventKind.DWELL_SELECT:
        chart = event.chart
        if chart is None or chart.granularity is Granularity.DISTRIBUTION:
            return state, []  # no secondary layer for histograms
        if state.locked:
            # While locked, selections only move the highlight.
            new = replace(state, highlight=chart)
            return new, [Effect(EffectKind.HIGHLIGHT_CHART, chart=chart, flag=True)]
        new = replace(state, secondary=chart, highlight=chart)
        return new, [Effect(EffectKind.HIGHLIGHT_CHART, chart=chart, flag=True)]

    if kind is EventKind.ROTATED_CW:
        if state.secondary is None or state.locked:
            return state, []
        return replace(state, locked=True), [Effect(EffectKind.LOCK_ICON, flag=True)]

    if kind is EventKind.ROTATED_CCW:
        effects = []
        new = state
        if state.locked:
            new = replace(new, locked=False)
            effects.append(Effect(EffectKind.LOCK_ICON, flag=False))
        if not new.near and new.secondary is not None:
            new = replace(new, secondary=None, highlight=None)
            effects.append(Effect(EffectKind.REFRESH_CHARTS))
        return new, effects

    if kind is EventKind.PITCH_AT_CHART:
        chart = event.chart
        if chart is None or chart.granularity is Granularity.DISTRIBUTION:
            return state, []  # histograms are never shoeboxed
        shoebox = _shoebox_add(state.shoebox, building, chart)
        if shoebox == state.shoebox:
            return state, []  # duplicate add is a no-op
        return replace(state, shoebox=shoebox), [
            Effect(EffectKind.SHOEBOX_FLY, chart=chart, building=building),
            Effect(EffectKind.SHOEBOX_BADGE, chart=chart, building=building)]

    if kind is EventKind.PITCH_AT_SHOEBOX:
        return state, [Effect(EffectKind.SHOW_SHOEBOX_FOR, building=building)]

    return state, []  # unknown combination: explicit no-op


def with_shadow(state: DashboardState, proxy: str,
                shadow: ShadowState | None) -> DashboardState:
    """Attach live shadow geometry to a held proxy.  Render state only;
    replay never needs it, so it is applied outside of reduce."""
    if proxy not in dict(state.shadows):
        return state
    return replace(state, shadows=tuple(
        (p, shadow if p == proxy else s) for p, s in state.shadows))


def replay(events: Iterable[InteractionEvent], binding: Mapping[str, str],
           initial: DashboardState = INITIAL_STATE) -> DashboardState:
    """Left fold of reduce; effects are discarded, errors carry the index."""
    state = initial
    for i, ev in enumerate(events):
        try:
            state, _ = reduce(state, ev, binding)
        except ReducerError as exc:
            raise ReplayError(i, exc) from exc
    return state


# -- snapshots -------------------------------------------------------------

@dataclass(frozen=True)
class LegendEntry:
    building: str
    name: str
    color: str
    highlighted: bool


@dataclass(frozen=True)
class RenderModel:
    """Everything the dashboard needs to draw one frame."""

    charts: tuple[ChartData, ...]
    legend: tuple[LegendEntry, ...]
    shoebox: tuple[tuple[str, tuple[ChartId, ...]], ...]
    shadows: tuple[tuple[str, ShadowState | None], ...]
    locked: bool
    secondary: ChartId | None
    highlight: ChartId | None


def snapshot(state: DashboardState, readings: ReadingSet,
             buildings: Mapping[str, Building]) -> RenderModel:
    """Aggregate the current state into a frame: the 12 overview charts or
    the drill-down sub-charts, legend flags, and the shoebox grid grouped
    by building."""
    if state.secondary is None:
        charts = tuple(aggregate(readings, c, state.filter) for c in CHART_UNIVERSE)
    else:
        charts = tuple(drill_down(state.secondary, readings, state.filter))
    legend = tuple(LegendEntry(b.id, b.name, b.color, b.id in state.filter)
                   for b in buildings.values())
    return RenderModel(charts=charts, legend=legend, shoebox=state.shoebox,
                       shadows=state.shadows, locked=state.locked,
                       secondary=state.secondary, highlight=state.highlight)


# -- serialization, hashing and the shoebox sidecar -------------------------

def state_to_dict(state: DashboardState) -> dict:
    return {
        "filter": list(state.filter),
        "highlight": state.highlight.key() if state.highlight else None,
        "locked": state.locked,
        "near": list(state.near),
        "secondary": state.secondary.key() if state.secondary else None,
        "shadows": sorted(p for p, _ in state.shadows),
        "shoebox": {b: [c.key() for c in cs] for b, cs in state.shoebox},
    }


def state_from_dict(doc: dict) -> DashboardState:
    return DashboardState(
        filter=tuple(doc.get("filter", ())),
        secondary=ChartId.from_key(doc["secondary"]) if doc.get("secondary") else None,
        locked=bool(doc.get("locked", False)),
        shoebox=tuple((b, tuple(ChartId.from_key(k) for k in cs))
                      for b, cs in doc.get("shoebox", {}).items()),
        shadows=tuple((p, None) for p in doc.get("shadows", ())),
        highlight=ChartId.from_key(doc["highlight"]) if doc.get("highlight") else None,
        near=tuple(doc.get("near", ())),
    )


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def state_hash(state: DashboardState) -> str:
    return hashlib.sha256(canonical_json(state_to_dict(state)).encode()).hexdigest()


def save_shoebox(state: DashboardState, path: str | Path, scenario_id: str) -> None:
    doc = {"scenario": scenario_id,
           "shoebox": {b: [c.key() for c in cs] for b, cs in state.shoebox}}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_shoebox(path: str | Path, scenario_id: str) -> tuple:
    """Shoebox entries persisted for a scenario; empty when absent/foreign."""
    path = Path(path)
    if not path.exists():
        return ()
    doc = json.loads(path.read_text())
    if doc.get("scenario") != scenario_id:
        return ()
    return tuple((b, tuple(ChartId.from_key(k) for k in cs))
                 for b, cs in doc.get("shoebox", {}).items())
