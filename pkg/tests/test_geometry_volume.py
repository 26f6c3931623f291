import numpy as np
import pytest

from scenemotion.errors import ValidationError
from scenemotion.geometry import (
    box_sdf, query_volume, query_volume_many, voxelize_box_object,
    voxelize_box_union, voxelize_mesh,
)


def box_mesh(half, center=(0.0, 0.0, 0.0)):
    """12-triangle axis-aligned box, outward winding."""
    hx, hy, hz = half
    c = np.asarray(center, dtype=float)
    v = np.array([[sx * hx, sy * hy, sz * hz]
                  for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]) + c
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # -x, +x
        (0, 4, 5, 1), (2, 3, 7, 6),  # -y, +y
        (0, 2, 6, 4), (1, 5, 7, 3),  # -z, +z
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append([v[a], v[b], v[cc]])
        tris.append([v[a], v[cc], v[d]])
    return np.asarray(tris)


def point_triangle_distance_ref(p, tri):
    """Reference point-triangle distance by dense barycentric sampling plus edges."""
    a, b, c = (np.asarray(x, dtype=float) for x in tri)
    best = np.inf
    n = 60
    for i in range(n + 1):
        for j in range(n + 1 - i):
            u, v = i / n, j / n
            q = a + u * (b - a) + v * (c - a)
            best = min(best, float(np.linalg.norm(p - q)))
    return best


class TestVoxelizeBox:
    def test_center_value(self):
        vol = voxelize_box_object((0.5, 0.5, 0.5), cell=0.05, padding=0.3)
        v, _ = query_volume(vol, (0.0, 0.0, 0.0))
        assert v == pytest.approx(-0.5, abs=vol.cell)

    def test_outside_face(self):
        vol = voxelize_box_object((0.5, 0.5, 0.5), cell=0.05, padding=0.5)
        v, _ = query_volume(vol, (0.8, 0.0, 0.0))
        assert v == pytest.approx(0.3, abs=vol.cell)

    def test_random_points_match_analytic(self):
        rng = np.random.default_rng(0)
        half = np.array([0.3, 0.2, 0.4])
        pos = np.array([0.1, 0.5, -0.2])
        yaw = 0.7
        vol = voxelize_box_object(half, pos, yaw, cell=0.04, padding=0.5)
        pts = pos + rng.uniform(-0.6, 0.6, size=(200, 3))
        vals, _ = query_volume_many(vol, pts)
        truth = box_sdf(pts, half, pos, np.cos(yaw), np.sin(yaw))
        assert np.max(np.abs(vals - truth)) <= vol.cell

    def test_negative_inside_positive_outside(self):
        vol = voxelize_box_object((0.2, 0.2, 0.2), cell=0.05)
        assert vol.sdf.min() < 0
        assert vol.sdf.max() > 0

    def test_bad_extents(self):
        with pytest.raises(ValidationError):
            voxelize_box_object((0.0, 0.1, 0.1))


class TestVoxelizeMesh:
    def test_box_mesh_matches_analytic(self):
        half = np.array([0.25, 0.2, 0.3])
        vol = voxelize_mesh(box_mesh(half), cell=0.05, padding=0.35)
        rng = np.random.default_rng(1)
        pts = rng.uniform(-0.45, 0.45, size=(150, 3))
        vals, _ = query_volume_many(vol, pts)
        truth = box_sdf(pts, half, np.zeros(3))
        assert np.max(np.abs(vals - truth)) <= 2 * vol.cell

    def test_negative_strictly_inside(self):
        half = np.array([0.2, 0.2, 0.2])
        vol = voxelize_mesh(box_mesh(half), cell=0.05, padding=0.3)
        v, _ = query_volume(vol, (0.0, 0.0, 0.0))
        assert v < 0

    def test_degenerate_mesh_errors(self):
        tris = np.zeros((1, 3, 3))
        with pytest.raises(ValidationError):
            voxelize_mesh(tris)


class TestQueryVolume:
    def make_volume(self):
        return voxelize_box_object((0.3, 0.25, 0.35), (0.0, 0.3, 0.0), 0.4,
                                   cell=0.05, padding=0.4)

    def test_node_identity(self):
        vol = self.make_volume()
        i, j, k = 4, 5, 6
        p = (vol.origin[0] + (i + 0.5) * vol.cell,
             vol.origin[1] + (j + 0.5) * vol.cell,
             vol.origin[2] + (k + 0.5) * vol.cell)
        v, _ = query_volume(vol, p)
        assert v == pytest.approx(float(vol.sdf[i, j, k]), abs=1e-9)

    def test_midpoint_linearity(self):
        vol = self.make_volume()
        i, j, k = 3, 4, 5
        base = np.array([vol.origin[0] + (i + 0.5) * vol.cell,
                         vol.origin[1] + (j + 0.5) * vol.cell,
                         vol.origin[2] + (k + 0.5) * vol.cell])
        mid = base + np.array([vol.cell / 2, 0, 0])
        v, _ = query_volume(vol, mid)
        assert v == pytest.approx(0.5 * (float(vol.sdf[i, j, k]) + float(vol.sdf[i + 1, j, k])),
                                  abs=1e-9)

    def test_gradient_matches_finite_differences(self):
        vol = self.make_volume()
        rng = np.random.default_rng(3)
        lo = np.asarray(vol.origin) + 1.5 * vol.cell
        hi = np.asarray(vol.origin) + (np.asarray(vol.dims) - 1.5) * vol.cell
        pts = rng.uniform(lo, hi, size=(120, 3))
        # stay off the lattice planes
        frac = (pts - np.asarray(vol.origin)) / vol.cell - 0.5
        frac = frac % 1.0
        pts = pts[np.all((frac > 0.02) & (frac < 0.98), axis=1)]
        vals, grads = query_volume_many(vol, pts)
        h = 1e-4 * vol.cell
        for p, g in zip(pts, grads):
            fd = np.empty(3)
            for ax in range(3):
                e = np.zeros(3)
                e[ax] = h
                v1, _ = query_volume(vol, p + e)
                v0, _ = query_volume(vol, p - e)
                fd[ax] = (v1 - v0) / (2 * h)
            denom = max(np.linalg.norm(fd), 1e-6)
            assert np.linalg.norm(g - fd) / denom < 1e-3

    def test_out_of_grid_extrapolation(self):
        vol = self.make_volume()
        border = np.asarray(vol.origin) + 0.5 * vol.cell
        inside_v, _ = query_volume(vol, border)
        far = border - np.array([2.0, 0.0, 0.0])
        v, g = query_volume(vol, far)
        assert v == pytest.approx(inside_v + 2.0, abs=1e-6)
        assert g[0] == pytest.approx(-1.0)


class TestBoxUnion:
    def test_union_is_min(self):
        boxes = [((0.2, 0.2, 0.2), (0.0, 0.2, 0.0), 0.0),
                 ((0.1, 0.3, 0.1), (0.3, 0.3, 0.0), 0.0)]
        vol = voxelize_box_union(boxes, center=(0.1, 0.25, 0.0), cell=0.05, padding=0.3)
        rng = np.random.default_rng(4)
        pts = rng.uniform(-0.4, 0.6, size=(100, 3))
        vals, _ = query_volume_many(vol, pts)
        truth = np.minimum(
            box_sdf(pts, np.array(boxes[0][0]), np.array(boxes[0][1])),
            box_sdf(pts, np.array(boxes[1][0]), np.array(boxes[1][1])))
        assert np.max(np.abs(vals - truth)) <= vol.cell
