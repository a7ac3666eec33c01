"""proxydash: deterministic tabletop simulator for self-driving tangible
proxies, a 6-DoF gesture engine, a dashboard state machine and a
role-based WebSocket hub with record/replay."""

__version__ = "0.1.0"

from .charts import CHART_UNIVERSE, ChartData, ChartId, Granularity, aggregate, drill_down
from .dashboard import DashboardState, Effect, INITIAL_STATE, reduce, replay, snapshot
from .dataset import Attribute, Reading, ReadingSet, load_readings
from .geometry import MapViewport, TablePose, Workspace, geo_to_table, table_to_geo
from .gestures import (DashboardLayout, EventKind, GestureConfig, GestureEngine,
                       InteractionEvent, ShadowState)
from .scenario import Building, Scenario, load_scenario
from .session import Metrics, Session

__all__ = [
    "CHART_UNIVERSE", "ChartData", "ChartId", "Granularity", "aggregate",
    "drill_down", "DashboardState", "Effect", "INITIAL_STATE", "reduce",
    "replay", "snapshot", "Attribute", "Reading", "ReadingSet",
    "load_readings", "MapViewport", "TablePose", "Workspace", "geo_to_table",
    "table_to_geo", "DashboardLayout", "EventKind", "GestureConfig",
    "GestureEngine", "InteractionEvent", "ShadowState", "Building",
    "Scenario", "load_scenario", "Metrics", "Session",
]
