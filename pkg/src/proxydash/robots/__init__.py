"""Simulated self-driving proxy carriers."""

from .controller import ControllerConfig, Fleet, Mode, Robot, TargetError, assign_target, follow
from .grid import OccupancyGrid
from .kinematics import RobotParams, clamp_wheels, step_kinematics
from .planner import BlockedError, Path, PlannerConfig, PlanningError, plan, string_pull

__all__ = [
    "ControllerConfig", "Fleet", "Mode", "Robot", "TargetError",
    "assign_target", "follow", "OccupancyGrid", "RobotParams",
    "clamp_wheels", "step_kinematics", "BlockedError", "Path",
    "PlannerConfig", "PlanningError", "plan", "string_pull",
]
