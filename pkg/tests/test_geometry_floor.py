import numpy as np
import pytest

from scenemotion.geometry import (
    NO_OBSTACLE_CLAMP, FloorMap, distance_transform, query_field,
    query_field_many,
)


def brute_force_signed_distance(walk: np.ndarray, cell: float) -> np.ndarray:
    """O(W^2 H^2) nearest-cell scan; the definition of the transform."""
    w, h = walk.shape
    ii, jj = np.meshgrid(np.arange(w), np.arange(h), indexing="ij")
    d = np.empty(walk.shape, dtype=np.float64)
    if walk.all():
        d.fill(NO_OBSTACLE_CLAMP)
        return d
    wi, wj = np.nonzero(walk)
    bi, bj = np.nonzero(~walk)
    for i in range(w):
        for j in range(h):
            if walk[i, j]:
                sq = ((i - bi) ** 2 + (j - bj) ** 2).min()
                d[i, j] = -cell * np.sqrt(np.float64(sq))
            else:
                sq = ((i - wi) ** 2 + (j - wj) ** 2).min()
                d[i, j] = cell * np.sqrt(np.float64(sq))
    return d


def random_map(rng, max_side=48):
    w = int(rng.integers(2, max_side + 1))
    h = int(rng.integers(2, max_side + 1))
    walk = rng.random((w, h)) > rng.uniform(0.1, 0.5)
    if not walk.any():
        walk[rng.integers(0, w), rng.integers(0, h)] = True
    return FloorMap(origin=(rng.normal(), rng.normal()), cell=float(rng.uniform(0.02, 0.2)),
                    walkable=walk)


class TestDistanceTransform:
    def test_all_walkable_clamped(self):
        fmap = FloorMap((0, 0), 0.1, np.ones((4, 4), dtype=bool))
        field = distance_transform(fmap)
        assert np.all(field.d == NO_OBSTACLE_CLAMP)

    def test_three_by_three_center_blocked(self):
        walk = np.ones((3, 3), dtype=bool)
        walk[1, 1] = False
        field = distance_transform(FloorMap((0, 0), 0.1, walk))
        assert field.d[1, 1] == pytest.approx(0.1)
        assert field.d[0, 1] == pytest.approx(-0.1)
        assert field.d[1, 0] == pytest.approx(-0.1)
        # diagonal walkable cell is still one cell from the blocked center
        assert field.d[0, 0] == pytest.approx(-0.1 * np.sqrt(2))

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            fmap = random_map(rng, max_side=32)
            field = distance_transform(fmap)
            oracle = brute_force_signed_distance(fmap.walkable, fmap.cell)
            assert np.array_equal(field.d, oracle)

    def test_sign_invariants_and_lipschitz(self):
        # the signed field jumps by 2 cells across the walkable boundary by
        # construction (the 3x3 example pins +0.1 next to -0.1), so the
        # 1-Lipschitz bound is checked on |d|, where it holds everywhere
        rng = np.random.default_rng(7)
        for _ in range(10):
            fmap = random_map(rng, max_side=24)
            field = distance_transform(fmap)
            has_obstacle = not fmap.walkable.all()
            if has_obstacle:
                assert np.all(field.d[~fmap.walkable] > 0)
            assert np.all(field.d[fmap.walkable] <= 0)
            mag = np.abs(field.d)
            if has_obstacle:
                assert np.abs(np.diff(mag, axis=0)).max(initial=0) <= fmap.cell + 1e-6
                assert np.abs(np.diff(mag, axis=1)).max(initial=0) <= fmap.cell + 1e-6
                # signed values stay 1-Lipschitz away from sign changes
                same_x = np.sign(field.d[1:, :]) == np.sign(field.d[:-1, :])
                assert np.abs(np.diff(field.d, axis=0))[same_x].max(initial=0) <= fmap.cell + 1e-6


class TestQueryField:
    def make_field(self, rng, w=12, h=10, cell=0.1):
        walk = rng.random((w, h)) > 0.3
        walk[0, 0] = True
        return distance_transform(FloorMap((0.0, 0.0), cell, walkable=walk))

    def test_node_value_and_central_difference_gradient(self):
        rng = np.random.default_rng(0)
        field = self.make_field(rng)
        cell = field.cell
        for (i, j) in [(3, 4), (5, 5), (2, 7)]:
            x = (i + 0.5) * cell
            z = (j + 0.5) * cell
            v, (gx, gz) = query_field(field, x, z)
            assert v == pytest.approx(field.d[i, j], abs=1e-12)
            assert gx == pytest.approx((field.d[i + 1, j] - field.d[i - 1, j]) / (2 * cell), rel=1e-9)
            assert gz == pytest.approx((field.d[i, j + 1] - field.d[i, j - 1]) / (2 * cell), rel=1e-9)

    def test_midpoint_linear(self):
        walk = np.ones((4, 4), dtype=bool)
        walk[0, :] = False
        field = distance_transform(FloorMap((0, 0), 0.1, walk))
        d = np.array(field.d)
        # midpoint between cells (1, 1) and (2, 1)
        v, _ = query_field(field, 0.1 * 2.0, 0.1 * 1.5)
        assert v == pytest.approx(0.5 * (d[1, 1] + d[2, 1]), abs=1e-12)

    def test_spec_midpoint_example(self):
        # two adjacent cells holding 0.1 and 0.3 -> midpoint reads 0.2
        field_vals = np.array([[0.1, 0.3], [0.1, 0.3]])
        from scenemotion.geometry import DistanceField2D
        field = DistanceField2D((0, 0), 1.0, field_vals)
        v, _ = query_field(field, 0.5, 1.0)
        assert v == pytest.approx(0.2, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        field = self.make_field(rng, w=20, h=16)
        cell = field.cell
        pts = rng.uniform([cell, cell], [19 * cell, 15 * cell], size=(100, 2))
        # keep away from lattice lines so the interpolant is smooth at +-h
        gx = (pts[:, 0] / cell - 0.5) % 1.0
        gz = (pts[:, 1] / cell - 0.5) % 1.0
        keep = (gx > 0.01) & (gx < 0.99) & (gz > 0.01) & (gz < 0.99)
        pts = pts[keep]
        vals, grads = query_field_many(field, pts)
        h = 1e-4 * cell
        for p, g in zip(pts, grads):
            fx1, _ = query_field(field, p[0] + h, p[1])
            fx0, _ = query_field(field, p[0] - h, p[1])
            fz1, _ = query_field(field, p[0], p[1] + h)
            fz0, _ = query_field(field, p[0], p[1] - h)
            fd = np.array([(fx1 - fx0) / (2 * h), (fz1 - fz0) / (2 * h)])
            denom = max(np.linalg.norm(fd), 1e-6)
            assert np.linalg.norm(g - fd) / denom < 1e-4

    def test_out_of_grid_extrapolation(self):
        rng = np.random.default_rng(2)
        field = self.make_field(rng)
        cell = field.cell
        # border cell center of column 0, then 1 m further out in -x
        z = (3 + 0.5) * cell
        border_v, _ = query_field(field, 0.5 * cell, z)
        v, (gx, gz) = query_field(field, 0.5 * cell - 1.0, z)
        assert v == pytest.approx(border_v + 1.0, abs=1e-9)
        assert gx == pytest.approx(-1.0)
