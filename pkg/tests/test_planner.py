"""Planner tests against breadth-first / connectivity oracles."""

import math
import random
from collections import deque

import pytest

from proxydash.geometry import Workspace
from proxydash.robots import (BlockedError, OccupancyGrid, PlannerConfig, plan,
                              string_pull)
from proxydash.robots.planner import parked_path


def bfs_oracle(rows, start, goal):
    """Shortest 4-connected path length on 0/1 rows; None if disconnected.

    Written directly against the row representation so it shares nothing
    with the A* implementation.
    """
    ny, nx = len(rows), len(rows[0])
    if rows[start[1]][start[0]] or rows[goal[1]][goal[0]]:
        return None
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == goal:
            return dist[cell]
        i, j = cell
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < nx and 0 <= nj < ny and not rows[nj][ni] \
                    and (ni, nj) not in dist:
                dist[(ni, nj)] = dist[cell] + 1
                queue.append((ni, nj))
    return None


def random_grid(rng, nx, ny, p_blocked):
    return [[1 if rng.random() < p_blocked else 0 for _ in range(nx)]
            for _ in range(ny)]


def free_cells(rows):
    return [(i, j) for j in range(len(rows)) for i in range(len(rows[0]))
            if not rows[j][i]]


def cell_pt(cell):
    return (cell[0] + 0.5, cell[1] + 0.5)


def test_empty_grid_matches_bfs():
    rows = [[0] * 10 for _ in range(10)]
    grid = OccupancyGrid.from_rows(rows)
    path = plan(grid, cell_pt((0, 0)), cell_pt((9, 9)))
    assert path.cost == bfs_oracle(rows, (0, 0), (9, 9)) == 18


def test_start_equals_goal():
    grid = OccupancyGrid.from_rows([[0] * 5 for _ in range(5)])
    path = plan(grid, (2.5, 2.5), (2.5, 2.5))
    assert path.cost == 0
    assert path.total_length == 0.0
    assert len(path.waypoints) == 1


def test_wall_with_no_gap_is_blocked():
    rows = [[0] * 7 for _ in range(7)]
    for j in range(7):
        rows[j][3] = 1
    grid = OccupancyGrid.from_rows(rows)
    with pytest.raises(BlockedError):
        plan(grid, cell_pt((0, 0)), cell_pt((6, 6)))


def test_200_random_grids_match_oracles():
    rng = random.Random(2024)
    checked_paths = 0
    checked_blocked = 0
    for _ in range(200):
        nx = rng.randint(4, 50)
        ny = rng.randint(4, 50)
        rows = random_grid(rng, nx, ny, rng.uniform(0.1, 0.4))
        cells = free_cells(rows)
        if len(cells) < 2:
            continue
        start, goal = rng.sample(cells, 2)
        grid = OccupancyGrid.from_rows(rows)
        want = bfs_oracle(rows, start, goal)
        if want is None:
            with pytest.raises(BlockedError):
                plan(grid, cell_pt(start), cell_pt(goal))
            checked_blocked += 1
        else:
            path = plan(grid, cell_pt(start), cell_pt(goal))
            assert path.cost == want
            checked_paths += 1
    assert checked_paths > 100
    assert checked_blocked > 10


def test_waypoints_are_grid_adjacent_and_free():
    rng = random.Random(5)
    rows = random_grid(rng, 20, 20, 0.25)
    cells = free_cells(rows)
    grid = OccupancyGrid.from_rows(rows)
    rng2 = random.Random(6)
    for _ in range(20):
        start, goal = rng2.sample(cells, 2)
        try:
            path = plan(grid, cell_pt(start), cell_pt(goal))
        except BlockedError:
            continue
        for (x, y) in path.waypoints:
            assert grid.is_free(*grid.cell_of(x, y))
        for a, b in zip(path.waypoints, path.waypoints[1:]):
            ca, cb = grid.cell_of(*a), grid.cell_of(*b)
            assert abs(ca[0] - cb[0]) + abs(ca[1] - cb[1]) == 1
        assert path.total_length == pytest.approx(sum(
            math.dist(a, b) for a, b in zip(path.waypoints, path.waypoints[1:])))


def test_goal_snaps_to_nearest_free_cell():
    rows = [[0] * 5 for _ in range(5)]
    rows[4][4] = 1
    grid = OccupancyGrid.from_rows(rows)
    path = plan(grid, cell_pt((0, 0)), cell_pt((4, 4)))
    end = grid.cell_of(*path.smoothed[-1])
    assert grid.is_free(*end)
    assert end != (4, 4)


def test_smoothed_path_stays_in_free_space():
    rng = random.Random(11)
    rows = random_grid(rng, 30, 30, 0.2)
    grid = OccupancyGrid.from_rows(rows)
    cells = free_cells(rows)
    for _ in range(10):
        start, goal = rng.sample(cells, 2)
        try:
            path = plan(grid, cell_pt(start), cell_pt(goal))
        except BlockedError:
            continue
        for a, b in zip(path.smoothed, path.smoothed[1:]):
            assert grid.segment_free(a, b)


def test_string_pull_shortens_or_keeps_length():
    rng = random.Random(3)
    rows = random_grid(rng, 25, 25, 0.2)
    grid = OccupancyGrid.from_rows(rows)
    cells = free_cells(rows)
    for _ in range(10):
        start, goal = rng.sample(cells, 2)
        try:
            path = plan(grid, cell_pt(start), cell_pt(goal))
        except BlockedError:
            continue
        raw = sum(math.dist(a, b)
                  for a, b in zip(path.waypoints, path.waypoints[1:]))
        smooth = sum(math.dist(a, b)
                     for a, b in zip(path.smoothed, path.smoothed[1:]))
        assert smooth <= raw + 1e-9


def test_reservation_forces_wait_or_detour():
    # A room with a parked robot in the middle: the planned route must
    # keep the separation distance from it at every scheduled step.
    rows = [[0] * 14 for _ in range(7)]
    grid = OccupancyGrid.from_rows(rows, cell_size=0.02)
    cfg = PlannerConfig(separation=0.05, nominal_speed=0.09)
    blockers = [(parked_path(0.13, 0.03), 0.0)]
    path = plan(grid, (0.01, 0.03), (0.27, 0.03), others=blockers, cfg=cfg)
    for _, x, y in path.schedule:
        assert math.dist((x, y), (0.13, 0.03)) >= cfg.separation - 1e-9


def test_moving_reservation_respected_in_time():
    # Another robot sweeps the room left to right; the planned trajectory
    # must never be within separation of it (up to one cell of sampling
    # slack between the discrete step checks).
    rows = [[0] * 20 for _ in range(9)]
    grid = OccupancyGrid.from_rows(rows, cell_size=0.02)
    cfg = PlannerConfig(separation=0.05, nominal_speed=0.09, pad_steps=2)
    sweeper = plan(grid, (0.01, 0.09), (0.39, 0.09), cfg=cfg)
    path = plan(grid, (0.39, 0.09), (0.01, 0.09), others=[(sweeper, 0.0)],
                cfg=cfg)
    tau = grid.cell_size / cfg.nominal_speed
    t = 0.0
    end = max(path.schedule[-1][0], sweeper.schedule[-1][0])
    while t <= end:
        mine = path.position_at(t)
        theirs = sweeper.position_at(t)
        assert math.dist(mine, theirs) >= cfg.separation - grid.cell_size
        t += tau / 2


def test_workspace_grid_blocks_margin_band():
    ws = Workspace()
    grid = OccupancyGrid.from_workspace(ws, cell_size=0.02, inflation=0.06)
    band = ws.safety_margin + 0.06
    for (i, j) in [(0, 0), (grid.nx - 1, grid.ny - 1)]:
        assert not grid.is_free(i, j)
    for (i, j) in grid.free_cells():
        x, y = grid.center_of(i, j)
        assert band <= x <= ws.width - band
        assert band <= y <= ws.height - band


def test_nearest_free_cell():
    rows = [[0] * 5 for _ in range(5)]
    rows[0][0] = 1
    grid = OccupancyGrid.from_rows(rows)
    assert grid.nearest_free_cell(0.5, 0.5) in [(1, 0), (0, 1)]
    assert grid.nearest_free_cell(2.5, 2.5) == (2, 2)
