"""Collision-free route planning on the occupancy grid.

Single-robot search is A* over grid cells (4-connected, unit step cost),
so the pre-smoothing cost of an unconstrained plan is exactly the
breadth-first shortest path length.  Robots are planned in fixed priority
order; each later plan runs the same A* through space-time (a wait move
becomes available) against the timed cell reservations of every
already-planned robot, keeping at least ``separation`` meters between
centers.  The spatial route is then string-pulled into a short polyline
for the tracker to follow.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .grid import OccupancyGrid


class PlanningError(RuntimeError):
    pass


class BlockedError(PlanningError):
    """No conflict-free route exists right now; caller retries later."""


@dataclass(frozen=True)
class Path:
    """A planned route.

    waypoints are the raw grid cell centers (consecutive cells adjacent);
    smoothed is the string-pulled polyline actually tracked, running from
    the exact start to the exact goal; schedule holds one (t_rel, x, y)
    sample per space-time step, waits included, and is what later robots
    plan against.
    """

    waypoints: tuple[tuple[float, float], ...]
    smoothed: tuple[tuple[float, float], ...]
    schedule: tuple[tuple[float, float, float], ...]
    cost: int
    total_length: float

    def position_at(self, t_rel: float) -> tuple[float, float]:
        """Scheduled position at a relative time (clamped to the ends)."""
        sched = self.schedule
        if not sched or t_rel <= sched[0][0]:
            return sched[0][1], sched[0][2]
        if t_rel >= sched[-1][0]:
            return sched[-1][1], sched[-1][2]
        lo, hi = 0, len(sched) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if sched[mid][0] <= t_rel:
                lo = mid
            else:
                hi = mid
        t0, x0, y0 = sched[lo]
        t1, x1, y1 = sched[hi]
        f = (t_rel - t0) / (t1 - t0)
        return (x0 + (x1 - x0) * f, y0 + (y1 - y0) * f)


@dataclass(frozen=True)
class PlannerConfig:
    nominal_speed: float = 0.09   # m/s assumed for reservations / ETAs
    separation: float = 0.13     # m minimum center distance while planning
    pad_steps: int = 2            # reservation slack, in time steps
    horizon_steps: int = 1200     # space-time search cap
    transient_steps: int = 14     # how long a soon-to-move robot is avoided


def _tau(grid: OccupancyGrid, cfg: PlannerConfig) -> float:
    return grid.cell_size / cfg.nominal_speed


def _polyline_length(points) -> float:
    return sum(math.dist(points[k], points[k + 1]) for k in range(len(points) - 1))


def _segment_point_dist(a, b, p) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / denom))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def string_pull(points: list[tuple[float, float]], grid: OccupancyGrid,
                disks: tuple = (), clearance: float = 0.0,
                ) -> list[tuple[float, float]]:
    """Greedy line-of-sight shortcutting over an already-inflated grid.

    A shortcut is only taken when the straight segment stays in free
    cells and keeps ``clearance`` meters from every disk center (parked
    robots the grid knows nothing about)."""

    def visible(a, b) -> bool:
        if not grid.segment_free(a, b):
            return False
        return all(_segment_point_dist(a, b, c) >= clearance for c in disks)

    if len(points) <= 2:
        return list(points)
    out = [points[0]]
    anchor = 0
    while anchor < len(points) - 1:
        far = anchor + 1
        for cand in range(len(points) - 1, anchor + 1, -1):
            if visible(points[anchor], points[cand]):
                far = cand
                break
        out.append(points[far])
        anchor = far
    return out


class _Reservations:
    """Other robots' schedules resampled onto this search's step grid.

    Each entry is (track, final): the track covers the steps where the
    robot is still moving, after which it sits parked at final.  A
    transient robot (one that is about to replan and move away) gets a
    short constant track and no final, so it blocks nearby steps without
    poisoning goal feasibility.
    """

    def __init__(self, others, start_time: float, tau: float, horizon: int,
                 pad: int, transient_steps: int):
        self.entries: list[tuple[list[tuple[float, float]],
                                 tuple[float, float] | None]] = []
        for entry in others:
            path, other_start = entry[0], entry[1]
            # Third element: None for a committed schedule (its end parks
            # for good), or a step count the robot is assumed to block its
            # current spot for; such entries never poison goals.
            span_override = entry[2] if len(entry) > 2 else None
            if span_override is True or span_override is False:
                span_override = transient_steps if span_override else None
            if not path.schedule:
                continue
            last = path.schedule[-1]
            final = (last[1], last[2])
            if span_override is not None:
                span = min(int(span_override) + pad + 1, horizon + 1)
                track = [final] * span
                self.entries.append((track, None))
                continue
            end_abs = other_start + last[0]
            span = int(math.ceil((end_abs - start_time) / tau)) + pad + 1
            span = min(max(span, 0), horizon + 1)
            track = []
            if span > 0 and len(path.schedule) > 1:
                track = [path.position_at(start_time + k * tau - other_start)
                         for k in range(span)]
            self.entries.append((track, final))

    def clear_at(self, point: tuple[float, float], k: int, pad: int,
                 sep2: float, escape_from: tuple[float, float] | None = None,
                 ) -> bool:
        """True when ``point`` is clear of every reservation around step k.

        With ``escape_from`` given, a violation is tolerated as long as
        the move strictly increases the distance to the violated
        reservation; that lets a robot that was stopped inside someone's
        separation disk back its way out instead of being plannerlocked.
        """
        x, y = point
        for track, final in self.entries:
            lo = max(k - pad, 0)
            for kk in range(lo, k + pad + 1):
                if kk < len(track):
                    ox, oy = track[kk]
                elif final is not None:
                    ox, oy = final
                else:
                    break
                d2 = (ox - x) ** 2 + (oy - y) ** 2
                if d2 < sep2:
                    if escape_from is None:
                        return False
                    fx, fy = escape_from
                    if d2 <= (ox - fx) ** 2 + (oy - fy) ** 2:
                        return False
        return True

    def clear_forever(self, point: tuple[float, float], k_from: int,
                      sep2: float) -> bool:
        """No reserved robot ever comes near ``point`` from step k_from on."""
        x, y = point
        for track, final in self.entries:
            for kk in range(min(k_from, len(track)), len(track)):
                ox, oy = track[kk]
                if (ox - x) ** 2 + (oy - y) ** 2 < sep2:
                    return False
            if final is not None:
                ox, oy = final
                if (ox - x) ** 2 + (oy - y) ** 2 < sep2:
                    return False
        return True

    def static_finals(self) -> tuple:
        return tuple(final for _, final in self.entries if final is not None)

    def smoothing_disks(self) -> tuple:
        """Where every reserved robot is right now (or ends up): shortcuts
        must not cut through these even when the grid route threaded past
        them in time."""
        disks = []
        for track, final in self.entries:
            if track:
                disks.append(track[0])
            if final is not None and (not track or final != track[0]):
                disks.append(final)
        return tuple(disks)

    def moving_horizon(self) -> int:
        """Last step at which any reservation is still in motion; waiting
        past this cannot change anything."""
        return max((len(track) for track, _ in self.entries), default=0)

    def statically_clear(self, point: tuple[float, float], sep2: float) -> bool:
        x, y = point
        for ox, oy in self.static_finals():
            if (ox - x) ** 2 + (oy - y) ** 2 < sep2:
                return False
        return True


def plan(grid: OccupancyGrid, start: tuple[float, float],
         goal: tuple[float, float], others=(),
         cfg: PlannerConfig = PlannerConfig(),
         start_time: float = 0.0) -> Path:
    """Plan a route from start to goal (table meters) avoiding the grid's
    blocked cells and, when ``others`` carry (Path, start_time) pairs, the
    reserved space-time cells of higher-priority robots.

    Raises BlockedError when no route exists within the horizon.
    """
    start_cell = grid.cell_of(*start)
    goal_cell = grid.cell_of(*goal)
    goal_exact = goal
    if not grid.is_free(*start_cell):
        snapped = grid.nearest_free_cell(*start)
        if snapped is None:
            raise PlanningError("no free cells in grid")
        start_cell = snapped
    if not grid.is_free(*goal_cell):
        snapped = grid.nearest_free_cell(*goal)
        if snapped is None:
            raise PlanningError("no free cells in grid")
        goal_cell = snapped
        goal_exact = grid.center_of(*goal_cell)

    tau = _tau(grid, cfg)
    timed = bool(others)
    res = (_Reservations(others, start_time, tau, cfg.horizon_steps,
                         cfg.pad_steps, cfg.transient_steps)
           if timed else None)
    sep2 = cfg.separation ** 2
    if timed:
        # No arrival time can ever fix a goal inside a parked footprint.
        if not res.statically_clear(grid.center_of(*goal_cell), sep2):
            raise BlockedError(f"goal {goal_cell} sits inside a reserved "
                               "footprint")
        # Waiting is only useful while reservations still move; past that
        # the world is static and the search is purely spatial.
        wait_limit = res.moving_horizon() + cfg.pad_steps + 1
        horizon = min(cfg.horizon_steps,
                      wait_limit + 4 * (grid.nx + grid.ny) + 16)
    else:
        wait_limit = 0
        horizon = cfg.horizon_steps

    if start_cell == goal_cell and not timed:
        wp = (grid.center_of(*start_cell),)
        return Path(waypoints=wp, smoothed=(start, goal_exact),
                    schedule=((0.0,) + goal_exact,), cost=0, total_length=0.0)

    def heuristic(cell: tuple[int, int]) -> int:
        return abs(cell[0] - goal_cell[0]) + abs(cell[1] - goal_cell[1])

    start_state = (start_cell[0], start_cell[1], 0)
    open_heap: list[tuple[int, int, int, tuple[int, int, int]]] = []
    heapq.heappush(open_heap, (heuristic(start_cell), heuristic(start_cell), 0, start_state))
    came: dict[tuple[int, int, int], tuple[int, int, int] | None] = {start_state: None}
    best_g: dict = {start_state: 0}
    push_idx = 0
    goal_state = None

    while open_heap:
        f, _, _, state = heapq.heappop(open_heap)
        i, j, k = state
        g = best_g[state]
        if (i, j) == goal_cell:
            if not timed or res.clear_forever(grid.center_of(i, j), k, sep2):
                goal_state = state
                break
            # Arrival now would sit in someone's way; keep searching (wait).
        if timed and k >= horizon:
            continue
        moves = ((1, 0), (-1, 0), (0, 1), (0, -1))
        if timed and k + 1 <= wait_limit:
            moves = moves + ((0, 0),)
        here = grid.center_of(i, j)
        for di, dj in moves:
            ni, nj = i + di, j + dj
            if not grid.is_free(ni, nj):
                continue
            nk = k + 1
            nstate = (ni, nj, nk) if timed else (ni, nj, 0)
            ng = g + 1
            if nstate in best_g and best_g[nstate] <= ng:
                continue
            if timed and not res.clear_at(grid.center_of(ni, nj), nk,
                                          cfg.pad_steps, sep2,
                                          escape_from=here):
                continue
            best_g[nstate] = ng
            came[nstate] = state
            push_idx += 1
            h = heuristic((ni, nj))
            heapq.heappush(open_heap, (ng + h, h, push_idx, nstate))

    if goal_state is None:
        raise BlockedError(f"no route from {start_cell} to {goal_cell}")

    cells: list[tuple[int, int]] = []
    node = goal_state
    while node is not None:
        cells.append((node[0], node[1]))
        node = came[node]
    cells.reverse()
    cost = len(cells) - 1  # space-time steps, waits included

    # Spatial waypoints drop wait repeats; the schedule keeps them.
    spatial = [cells[0]] + [c for a, c in zip(cells, cells[1:]) if c != a]
    waypoints = tuple(grid.center_of(*c) for c in spatial)
    schedule = []
    for k, c in enumerate(cells):
        cx, cy = grid.center_of(*c)
        schedule.append((k * tau, cx, cy))
    # Park at the exact goal once the grid route is done.
    if schedule and (schedule[-1][1], schedule[-1][2]) != goal_exact:
        schedule.append((len(cells) * tau,) + tuple(goal_exact))

    route = [start] + list(waypoints) + [goal_exact]
    dedup = [route[0]] + [p for a, p in zip(route, route[1:])
                          if math.dist(a, p) > 1e-12]
    disks = res.smoothing_disks() if timed else ()
    smoothed = tuple(string_pull(dedup, grid, disks=disks,
                                 clearance=cfg.separation))

    return Path(waypoints=waypoints, smoothed=smoothed,
                schedule=tuple(schedule), cost=cost,
                total_length=_polyline_length(waypoints))


def parked_path(x: float, y: float) -> Path:
    """Single-point path used to reserve a stationary robot's footprint."""
    return Path(waypoints=((x, y),), smoothed=((x, y),),
                schedule=((0.0, x, y),), cost=0, total_length=0.0)
