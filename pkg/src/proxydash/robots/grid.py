"""Occupancy grid over the workspace, with the boundary safety band blocked."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..geometry import Workspace


@dataclass
class OccupancyGrid:
    """Boolean blocked grid; cell (i, j) covers
    [i*cell, (i+1)*cell] x [j*cell, (j+1)*cell] in table meters.

    The blocked band along the edges is safety_margin + inflation wide,
    where inflation already accounts for the robot radius, so any path
    through free cell centers keeps robot centers inside the margin.
    """

    nx: int
    ny: int
    cell_size: float
    blocked: bytearray  # row-major, index j * nx + i
    inflation: float = 0.0

    @staticmethod
    def from_workspace(ws: Workspace, cell_size: float = 0.02,
                       inflation: float = 0.06) -> "OccupancyGrid":
        nx = max(int(round(ws.width / cell_size)), 1)
        ny = max(int(round(ws.height / cell_size)), 1)
        grid = OccupancyGrid(nx, ny, cell_size, bytearray(nx * ny), inflation)
        band = ws.safety_margin + inflation
        for j in range(ny):
            for i in range(nx):
                cx, cy = grid.center_of(i, j)
                if (cx < band or cx > ws.width - band
                        or cy < band or cy > ws.height - band):
                    grid.blocked[j * nx + i] = 1
        return grid

    @staticmethod
    def from_rows(rows: list[list[int]], cell_size: float = 1.0) -> "OccupancyGrid":
        """Build from row-major 0/1 rows (tests and random grids)."""
        ny, nx = len(rows), len(rows[0])
        blocked = bytearray(nx * ny)
        for j, row in enumerate(rows):
            for i, v in enumerate(row):
                blocked[j * nx + i] = 1 if v else 0
        return OccupancyGrid(nx, ny, cell_size, blocked)

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.nx and 0 <= j < self.ny

    def is_free(self, i: int, j: int) -> bool:
        return self.in_bounds(i, j) and not self.blocked[j * self.nx + i]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        i = min(max(int(x / self.cell_size), 0), self.nx - 1)
        j = min(max(int(y / self.cell_size), 0), self.ny - 1)
        return i, j

    def center_of(self, i: int, j: int) -> tuple[float, float]:
        return ((i + 0.5) * self.cell_size, (j + 0.5) * self.cell_size)

    def free_cells(self) -> list[tuple[int, int]]:
        return [(i, j) for j in range(self.ny) for i in range(self.nx)
                if self.is_free(i, j)]

    def nearest_free_cell(self, x: float, y: float) -> tuple[int, int] | None:
        """Closest free cell by BFS ring order from (x, y); None if all blocked."""
        start = self.cell_of(x, y)
        if self.is_free(*start):
            return start
        seen = {start}
        queue = deque([start])
        while queue:
            i, j = queue.popleft()
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nb = (i + di, j + dj)
                if nb in seen or not self.in_bounds(*nb):
                    continue
                if self.is_free(*nb):
                    return nb
                seen.add(nb)
                queue.append(nb)
        return None

    def segment_free(self, a: tuple[float, float], b: tuple[float, float]) -> bool:
        """True when the straight segment a-b stays in free cells (sampled
        at quarter-cell resolution; the grid is already inflated)."""
        ax, ay = a
        bx, by = b
        dist = ((bx - ax) ** 2 + (by - ay) ** 2) ** 0.5
        steps = max(int(dist / (self.cell_size * 0.25)), 1)
        for k in range(steps + 1):
            t = k / steps
            if not self.is_free(*self.cell_of(ax + (bx - ax) * t, ay + (by - ay) * t)):
                return False
        return True
