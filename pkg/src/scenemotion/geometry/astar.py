"""Grid A* with clearance erosion, string pulling and arc-length resampling."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..errors import PlacementError, UnreachableError
from .floor import DistanceField2D, FloorMap, distance_transform

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Path2D:
    """Planned floor path: resampled points plus the raw grid solution."""

    points: np.ndarray  # (n_points, 2) meters, uniform arc length
    grid_cost: float  # meters, cost of the 8-connected grid path
    waypoints: np.ndarray  # (k, 2) meters, string-pulled corners

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def eroded_walkable(fmap: FloorMap, clearance: float,
                    field: DistanceField2D | None = None) -> np.ndarray:
    """Cells whose signed distance stays at least `clearance` inside walkable."""
    if field is None:
        field = distance_transform(fmap)
    return field.d <= -float(clearance)


def resample_polyline(points: np.ndarray, n: int) -> np.ndarray:
    """Resample a polyline to n points at uniform arc length."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) == 1:
        return np.repeat(pts, n, axis=0)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0.0:
        return np.repeat(pts[:1], n, axis=0)
    targets = np.linspace(0.0, total, n)
    out = np.empty((n, 2), dtype=np.float64)
    out[:, 0] = np.interp(targets, s, pts[:, 0])
    out[:, 1] = np.interp(targets, s, pts[:, 1])
    # keep the exact endpoints regardless of interp rounding
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def _line_free(free: np.ndarray, fmap: FloorMap, a: np.ndarray, b: np.ndarray) -> bool:
    """Conservative line-of-sight: sample the segment at quarter-cell steps."""
    dist = float(np.linalg.norm(b - a))
    steps = max(2, int(dist / (0.25 * fmap.cell)) + 1)
    ts = np.linspace(0.0, 1.0, steps)
    xs = a[0] + ts * (b[0] - a[0])
    zs = a[1] + ts * (b[1] - a[1])
    ix = np.floor((xs - fmap.origin[0]) / fmap.cell).astype(int)
    iz = np.floor((zs - fmap.origin[1]) / fmap.cell).astype(int)
    inb = (ix >= 0) & (ix < fmap.width) & (iz >= 0) & (iz < fmap.height)
    if not inb.all():
        return False
    return bool(free[ix, iz].all())


def string_pull(cells_xy: np.ndarray, free: np.ndarray, fmap: FloorMap) -> np.ndarray:
    """Drop interior waypoints that a straight free segment can skip."""
    if len(cells_xy) <= 2:
        return cells_xy
    out = [cells_xy[0]]
    i = 0
    while i < len(cells_xy) - 1:
        j = len(cells_xy) - 1
        while j > i + 1 and not _line_free(free, fmap, cells_xy[i], cells_xy[j]):
            j -= 1
        out.append(cells_xy[j])
        i = j
    return np.asarray(out)


def grid_shortest_cost(free: np.ndarray, start_cell, goal_cell, cell: float) -> float:
    """Dijkstra over the same 8-connected grid; oracle for the A* cost."""
    dist = {start_cell: 0.0}
    pq = [(0.0, start_cell)]
    while pq:
        d, cur = heapq.heappop(pq)
        if cur == goal_cell:
            return d * cell
        if d > dist.get(cur, math.inf):
            continue
        for (di, dj), step in _NEIGHBORS:
            ni, nj = cur[0] + di, cur[1] + dj
            if not (0 <= ni < free.shape[0] and 0 <= nj < free.shape[1]):
                continue
            if not free[ni, nj]:
                continue
            if di != 0 and dj != 0 and not (free[cur[0] + di, cur[1]] and free[cur[0], cur[1] + dj]):
                continue
            nd = d + step
            if nd < dist.get((ni, nj), math.inf):
                dist[(ni, nj)] = nd
                heapq.heappush(pq, (nd, (ni, nj)))
    raise UnreachableError("no grid path exists")


_NEIGHBORS = [
    ((1, 0), 1.0), ((-1, 0), 1.0), ((0, 1), 1.0), ((0, -1), 1.0),
    ((1, 1), SQRT2), ((1, -1), SQRT2), ((-1, 1), SQRT2), ((-1, -1), SQRT2),
]


def astar_path(fmap: FloorMap, start, goal, clearance: float = 0.1,
               n_points: int = 100, field: DistanceField2D | None = None) -> Path2D:
    """Shortest 8-connected path on the clearance-eroded grid.

    Diagonal moves cost sqrt(2) and may not cut corners. The grid path is
    string-pulled and resampled to `n_points` at uniform arc length, with the
    exact start/goal positions at the ends.
    """
    free = eroded_walkable(fmap, clearance, field)
    start = np.asarray(start, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    s_cell = fmap.cell_of(start[0], start[1])
    g_cell = fmap.cell_of(goal[0], goal[1])
    for name, c in (("start", s_cell), ("goal", g_cell)):
        if not fmap.contains_cell(*c) or not free[c]:
            raise PlacementError(f"{name} {c} is not inside the eroded walkable region")

    w, h = free.shape
    gx, gz = g_cell

    def heuristic(i, j):
        return math.hypot(i - gx, j - gz)

    g_score = {s_cell: 0.0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    pq = [(heuristic(*s_cell), 0.0, s_cell)]
    closed = set()
    found = False
    while pq:
        _, d, cur = heapq.heappop(pq)
        if cur == g_cell:
            found = True
            break
        if cur in closed:
            continue
        closed.add(cur)
        ci, cj = cur
        for (di, dj), step in _NEIGHBORS:
            ni, nj = ci + di, cj + dj
            if not (0 <= ni < w and 0 <= nj < h) or not free[ni, nj]:
                continue
            if di != 0 and dj != 0 and not (free[ci + di, cj] and free[ci, cj + dj]):
                continue
            nd = d + step
            if nd < g_score.get((ni, nj), math.inf):
                g_score[(ni, nj)] = nd
                came[(ni, nj)] = cur
                heapq.heappush(pq, (nd + heuristic(ni, nj), nd, (ni, nj)))
    if not found:
        raise UnreachableError(f"no path from {tuple(start)} to {tuple(goal)}")

    cells = [g_cell]
    while cells[-1] != s_cell:
        cells.append(came[cells[-1]])
    cells.reverse()
    xy = np.array([fmap.cell_center(i, j) for i, j in cells], dtype=np.float64)
    # anchor the exact endpoints before smoothing
    xy[0] = start
    xy[-1] = goal
    pulled = string_pull(xy, free, fmap)
    return Path2D(points=resample_polyline(pulled, n_points),
                  grid_cost=g_score[g_cell] * fmap.cell,
                  waypoints=pulled)
