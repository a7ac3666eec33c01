"""Differential-drive kinematics with exact circular-arc integration.

v = (v_l + v_r) / 2, omega = (v_r - v_l) / wheel_base.  One step advances
the pose along the exact arc those commands trace, so composing n steps
of dt equals one step of n*dt up to floating point; determinism survives
tick-rate changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import wrap_angle

# Below this |omega| (rad/s) the arc is numerically a straight line.
STRAIGHT_OMEGA_EPS = 1e-9


@dataclass(frozen=True)
class RobotParams:
    radius: float = 0.05          # m, body radius (10 cm diameter carrier)
    max_wheel_speed: float = 0.15  # m/s per wheel
    wheel_base: float = 0.08      # m between wheel contact points
    mass: float = 0.12            # kg, informational

    def __post_init__(self) -> None:
        if not (self.radius > 0 and self.max_wheel_speed > 0 and self.wheel_base > 0):
            raise ValueError("robot parameters must be positive")


def clamp_wheels(v_left: float, v_right: float, limit: float) -> tuple[float, float]:
    """Scale a wheel pair into [-limit, limit] preserving the speed ratio."""
    peak = max(abs(v_left), abs(v_right))
    if peak <= limit or peak == 0.0:
        return v_left, v_right
    k = limit / peak
    return v_left * k, v_right * k


def step_kinematics(pose: tuple[float, float, float], cmd: tuple[float, float],
                    wheel_base: float, dt: float) -> tuple[float, float, float]:
    """Advance (x, y, yaw) by one exact-arc step under (v_left, v_right)."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    x, y, yaw = pose
    v_left, v_right = cmd
    v = 0.5 * (v_left + v_right)
    omega = (v_right - v_left) / wheel_base
    if abs(omega) < STRAIGHT_OMEGA_EPS:
        return (x + v * dt * math.cos(yaw),
                y + v * dt * math.sin(yaw),
                yaw)
    r = v / omega
    yaw2 = yaw + omega * dt
    return (x + r * (math.sin(yaw2) - math.sin(yaw)),
            y - r * (math.cos(yaw2) - math.cos(yaw)),
            wrap_angle(yaw2))
