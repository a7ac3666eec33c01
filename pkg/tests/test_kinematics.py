"""Differential-drive integration tests against a fine-step Euler oracle."""

import math
import random

import numpy as np
import pytest

from proxydash.robots import RobotParams, clamp_wheels, step_kinematics

PARAMS = RobotParams()
B = PARAMS.wheel_base


def euler_oracle(pose, cmd, wheel_base, duration, dt=1e-5):
    """Independent first-order integration of the same command."""
    x, y, yaw = pose
    v = 0.5 * (cmd[0] + cmd[1])
    omega = (cmd[1] - cmd[0]) / wheel_base
    steps = int(round(duration / dt))
    for _ in range(steps):
        x += v * math.cos(yaw) * dt
        y += v * math.sin(yaw) * dt
        yaw += omega * dt
    return x, y, yaw


def euler_oracle_batch(poses, cmds, wheel_base, duration, dt=1e-5):
    """Vectorized variant so 100 commands at dt=1e-5 stay fast."""
    x = np.array([p[0] for p in poses])
    y = np.array([p[1] for p in poses])
    yaw = np.array([p[2] for p in poses])
    v = 0.5 * (cmds[:, 0] + cmds[:, 1])
    omega = (cmds[:, 1] - cmds[:, 0]) / wheel_base
    steps = int(round(duration / dt))
    for _ in range(steps):
        x += v * np.cos(yaw) * dt
        y += v * np.sin(yaw) * dt
        yaw += omega * dt
    return x, y, yaw


def test_straight_line():
    x, y, yaw = step_kinematics((0.0, 0.0, 0.3), (0.1, 0.1), B, 2.0)
    assert x == pytest.approx(0.2 * math.cos(0.3))
    assert y == pytest.approx(0.2 * math.sin(0.3))
    assert yaw == pytest.approx(0.3)


def test_spin_in_place():
    v = 0.05
    dt = 0.5
    x, y, yaw = step_kinematics((0.2, 0.3, 0.0), (-v, v), B, dt)
    assert x == pytest.approx(0.2)
    assert y == pytest.approx(0.3)
    assert yaw == pytest.approx((2 * v / B) * dt)


def test_arc_step_composes():
    # n exact-arc steps of dt equal one step of n*dt (group property).
    cmd = (0.04, 0.09)
    pose = (0.1, 0.1, 0.2)
    one = step_kinematics(pose, cmd, B, 1.0)
    many = pose
    for _ in range(1000):
        many = step_kinematics(many, cmd, B, 1e-3)
    assert math.dist(one[:2], many[:2]) < 1e-12
    assert abs(one[2] - many[2]) < 1e-9


def test_exact_arc_matches_euler_oracle_100_random_commands():
    rng = random.Random(12345)
    poses = []
    cmds = []
    for _ in range(100):
        poses.append((rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                      rng.uniform(-math.pi, math.pi)))
        cmds.append((rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15)))
    ex, ey, eyaw = euler_oracle_batch(poses, np.array(cmds), B, 1.0)
    for k in range(100):
        x, y, yaw = step_kinematics(poses[k], cmds[k], B, 1.0)
        assert math.dist((x, y), (ex[k], ey[k])) < 1e-4
        # Exact arc wraps its yaw; compare on the circle.
        assert abs(math.remainder(yaw - eyaw[k], 2 * math.pi)) < 1e-6


def test_batch_oracle_agrees_with_scalar_oracle():
    pose = (0.0, 0.0, 0.1)
    cmd = (0.03, 0.11)
    sx, sy, syaw = euler_oracle(pose, cmd, B, 0.01)
    bx, by, byaw = euler_oracle_batch([pose], np.array([cmd]), B, 0.01)
    assert (sx, sy, syaw) == pytest.approx((bx[0], by[0], byaw[0]))


def test_clamp_preserves_ratio():
    vl, vr = clamp_wheels(0.3, 0.1, 0.15)
    assert max(abs(vl), abs(vr)) == pytest.approx(0.15)
    assert vl / vr == pytest.approx(3.0)
    assert clamp_wheels(0.1, -0.1, 0.15) == (0.1, -0.1)


def test_dt_must_be_positive():
    with pytest.raises(ValueError):
        step_kinematics((0, 0, 0), (0.1, 0.1), B, 0.0)
