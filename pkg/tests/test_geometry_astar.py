import numpy as np
import pytest

from scenemotion.errors import PlacementError, UnreachableError
from scenemotion.geometry import (
    FloorMap, astar_path, eroded_walkable, grid_shortest_cost,
    resample_polyline,
)


def empty_room(side=4.0, cell=0.05):
    n = int(side / cell)
    return FloorMap((-side / 2, -side / 2), cell, np.ones((n, n), dtype=bool))


def room_with_wall(side=4.0, cell=0.05, gap_z=(-0.3, 0.3)):
    n = int(side / cell)
    walk = np.ones((n, n), dtype=bool)
    fmap = FloorMap((-side / 2, -side / 2), cell, walk)
    wx = n // 2
    walkable = walk.copy()
    zs = -side / 2 + (np.arange(n) + 0.5) * cell
    blocked = ~((zs > gap_z[0]) & (zs < gap_z[1]))
    walkable[wx, blocked] = False
    walkable[wx + 1, blocked] = False
    return FloorMap((-side / 2, -side / 2), cell, walkable)


class TestAstar:
    def test_empty_room_straight(self):
        fmap = empty_room()
        path = astar_path(fmap, (-1.0, 0.0), (1.0, 0.0), clearance=0.1, n_points=50)
        assert path.length == pytest.approx(2.0, abs=fmap.cell)
        assert np.allclose(path.points[0], (-1.0, 0.0))
        assert np.allclose(path.points[-1], (1.0, 0.0))
        # straight segment: every interior point stays near z = 0
        assert np.max(np.abs(path.points[:, 1])) < 2 * fmap.cell

    def test_wall_gap_matches_dijkstra_oracle(self):
        fmap = room_with_wall()
        clearance = 0.1
        free = eroded_walkable(fmap, clearance)
        start, goal = (-1.5, -1.2), (1.5, -1.2)
        path = astar_path(fmap, start, goal, clearance=clearance, n_points=100)
        s_cell = fmap.cell_of(*start)
        g_cell = fmap.cell_of(*goal)
        oracle_cost = grid_shortest_cost(free, s_cell, g_cell, fmap.cell)
        diag = np.sqrt(2) * fmap.cell
        assert path.grid_cost == pytest.approx(oracle_cost, abs=1e-9)
        # smoothed length can only shrink, and stays within a diagonal cell
        # of the grid optimum for this axis-aligned geometry
        assert path.length <= path.grid_cost + 1e-9
        assert abs(path.length - oracle_cost) <= 20 * diag
        # the path goes through the gap
        crossing = path.points[np.abs(path.points[:, 0]) < 0.1]
        assert np.all(np.abs(crossing[:, 1]) < 0.35)

    def test_goal_inside_obstacle_errors(self):
        fmap = room_with_wall()
        with pytest.raises(PlacementError):
            astar_path(fmap, (-1.5, -1.2), (0.0, -1.2), clearance=0.1)

    def test_unreachable_errors(self):
        n = 40
        walk = np.ones((n, n), dtype=bool)
        walk[n // 2, :] = False
        walk[n // 2 + 1, :] = False
        fmap = FloorMap((-1, -1), 0.05, walk)
        with pytest.raises(UnreachableError):
            astar_path(fmap, (-0.5, 0.0), (0.5, 0.0), clearance=0.0)

    def test_cost_monotone_in_clearance(self):
        fmap = room_with_wall()
        start, goal = (-1.5, 0.0), (1.5, 0.0)
        costs = []
        for clearance in (0.25, 0.15, 0.1, 0.05):
            path = astar_path(fmap, start, goal, clearance=clearance)
            costs.append(path.grid_cost)
        assert all(costs[i] >= costs[i + 1] - 1e-9 for i in range(len(costs) - 1))

    def test_resampled_count_and_uniform_spacing(self):
        fmap = empty_room()
        path = astar_path(fmap, (-1.0, -1.0), (1.0, 1.0), n_points=64)
        assert path.points.shape == (64, 2)
        seg = np.linalg.norm(np.diff(path.points, axis=0), axis=1)
        assert seg.max() - seg.min() < 1e-6


class TestResample:
    def test_endpoints_exact(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]])
        out = resample_polyline(pts, 10)
        assert np.array_equal(out[0], pts[0])
        assert np.array_equal(out[-1], pts[-1])
        assert out.shape == (10, 2)

    def test_arc_length_uniform(self):
        pts = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]])
        out = resample_polyline(pts, 8)
        seg = np.linalg.norm(np.diff(out, axis=0), axis=1)
        assert np.allclose(seg, seg[0], atol=1e-9)
