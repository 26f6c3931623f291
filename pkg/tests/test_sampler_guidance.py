import numpy as np
import pytest

from scenemotion.core import JOINT_POS_SLICE, default_skeleton
from scenemotion.geometry import FloorMap, distance_transform, voxelize_box_object
from scenemotion.sampler import (
    BlendSpec, FrameMask, GuidanceConfig, apply_guidance, blend,
    collision2d_objective, goal_mask, goal_objective, mask_inputs,
    penetration3d_objective, penetration_objective_joints, start_only_mask,
)
from scenemotion.errors import ValidationError


def rand_frames(rng, n=10, width=5):
    return rng.normal(size=(n, width))


class TestMasking:
    def test_all_ones(self):
        rng = np.random.default_rng(0)
        x_t, known = rand_frames(rng), rand_frames(rng)
        m = FrameMask(np.ones((10, 5), dtype=bool))
        out = mask_inputs(x_t, known, m)
        assert np.array_equal(out[:, :5], known)
        assert np.all(out[:, 5:] == 1.0)

    def test_all_zeros(self):
        rng = np.random.default_rng(1)
        x_t, known = rand_frames(rng), rand_frames(rng)
        m = FrameMask(np.zeros((10, 5), dtype=bool))
        out = mask_inputs(x_t, known, m)
        assert np.array_equal(out[:, :5], x_t)
        assert np.all(out[:, 5:] == 0.0)

    def test_default_goal_mask(self):
        rng = np.random.default_rng(2)
        x_t, known = rand_frames(rng), rand_frames(rng)
        m = goal_mask(10, 5)
        out = mask_inputs(x_t, known, m)
        assert np.array_equal(out[0, :5], known[0])
        assert np.array_equal(out[-1, :5], known[-1])
        assert np.array_equal(out[1:-1, :5], x_t[1:-1])
        assert np.array_equal(out[:, 5:], m.m.astype(float))

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            mask_inputs(np.zeros((10, 5)), np.zeros((10, 4)),
                        FrameMask(np.zeros((10, 5), dtype=bool)))


class TestGoalObjective:
    def test_exact_hit(self):
        x = np.zeros((10, 5))
        x[-1] = [1.0, 0.9, 2.0, 1.0, 0.0]
        j, g = goal_objective(x, np.array([1.0, 0.9, 2.0, 1.0, 0.0]))
        assert j == 0.0
        assert np.all(g == 0.0)

    def test_one_meter_off(self):
        x = np.zeros((10, 5))
        x[-1] = [2.0, 0.0, 0.0, 1.0, 0.0]
        j, g = goal_objective(x, np.array([1.0, 0.0, 0.0, 1.0, 0.0]))
        assert j == 1.0
        assert g[-1, 0] == 2.0
        assert np.count_nonzero(g) == 1
        assert np.all(g[:-1] == 0.0)

    def test_gradient_vs_finite_differences(self):
        rng = np.random.default_rng(3)
        x = rand_frames(rng)
        goal = rng.normal(size=5)
        j, g = goal_objective(x, goal)
        h = 1e-7
        for slot in range(5):
            xp = x.copy(); xp[-1, slot] += h
            xm = x.copy(); xm[-1, slot] -= h
            fd = (goal_objective(xp, goal)[0] - goal_objective(xm, goal)[0]) / (2 * h)
            assert abs(fd - g[-1, slot]) / max(abs(fd), 1e-9) < 1e-6

    def test_height_flag(self):
        x = np.zeros((4, 5))
        x[-1, 1] = 3.0
        j_with, _ = goal_objective(x, np.zeros(5), include_height=True)
        j_without, _ = goal_objective(x, np.zeros(5), include_height=False)
        assert j_with == 9.0 and j_without == 0.0


def walled_field():
    walk = np.ones((40, 40), dtype=bool)
    walk[18:22, :] = False
    return distance_transform(FloorMap((-1.0, -1.0), 0.05, walk))


class TestCollision2D:
    def test_inside_walkable_zero(self):
        field = walled_field()
        x = np.zeros((10, 5))
        x[:, 0] = -0.5  # left of the wall
        x[:, 2] = np.linspace(-0.8, 0.8, 10)
        j, g = collision2d_objective(x, field)
        assert j == 0.0
        assert np.all(g == 0.0)

    def test_single_term_mean(self):
        field = walled_field()
        x = np.zeros((10, 5))
        x[:, 0] = -0.5
        x[:, 2] = np.linspace(-0.8, 0.8, 10)
        # park one frame in the middle of the wall where d = +0.2 exactly:
        # wall spans x in [-0.1, 0.1), centers at -0.075.. so pick the column
        # center x = 0.025-0.05... use a known positive cell instead
        vals = field.d
        ix, iz = 19, 20
        assert vals[ix, iz] > 0
        x[4, 0] = -1.0 + (ix + 0.5) * 0.05
        x[4, 2] = -1.0 + (iz + 0.5) * 0.05
        j, g = collision2d_objective(x, field)
        assert j == pytest.approx(vals[ix, iz] / 10.0, rel=1e-12)
        assert np.count_nonzero(g[:, [0, 2]]) <= 2
        assert np.all(g[[0, 1, 2, 3, 5, 6, 7, 8, 9]] == 0.0)

    def test_gradient_vs_finite_differences(self):
        field = walled_field()
        rng = np.random.default_rng(4)
        x = np.zeros((6, 5))
        # points inside the wall, off lattice lines
        x[:, 0] = rng.uniform(-0.07, 0.07, size=6)
        x[:, 2] = rng.uniform(-0.9, 0.9, size=6)
        j, g = collision2d_objective(x, field)
        assert j > 0
        h = 1e-6
        for f in range(6):
            for slot in (0, 2):
                xp = x.copy(); xp[f, slot] += h
                xm = x.copy(); xm[f, slot] -= h
                fd = (collision2d_objective(xp, field)[0]
                      - collision2d_objective(xm, field)[0]) / (2 * h)
                assert abs(fd - g[f, slot]) / max(abs(fd), 1e-6) < 1e-3


class TestPenetration3D:
    def test_body_outside_zero(self):
        vol = voxelize_box_object((0.1, 0.1, 0.1), (0.0, 0.1, 0.0), cell=0.025, padding=0.6)
        sk = default_skeleton()
        joints = np.full((3, 22, 3), 5.0)
        j, g = penetration_objective_joints(joints, vol, sk.joint_radii)
        assert j == 0.0 and np.all(g == 0.0)

    def test_single_penetrating_proxy_point(self):
        # joint 0 sits so that exactly its bottom proxy point is 0.05 inside
        vol = voxelize_box_object((0.1, 0.1, 0.1), (0.0, 0.0, 0.0), cell=0.025, padding=0.4)
        radii = np.zeros(22)
        radii[0] = 0.12
        joints = np.full((1, 22, 3), 5.0)
        joints[0, 0] = (0.0, 0.17, 0.0)
        j, g = penetration_objective_joints(joints, vol, radii)
        assert j == pytest.approx(0.05, abs=1e-9)
        # pushing the joint up reduces the loss
        assert g[0, 0, 1] < 0.0

    def test_channel_gradient_vs_finite_differences(self):
        vol = voxelize_box_object((0.2, 0.2, 0.2), (0.0, 0.4, 0.0), cell=0.025, padding=0.5)
        sk = default_skeleton()
        rng = np.random.default_rng(5)
        frames = np.zeros((2, 268))
        frames[:, 0:3] = [0.05, 0.45, 0.03]
        theta = 0.4
        frames[:, 3], frames[:, 4] = np.cos(theta), np.sin(theta)
        frames[:, JOINT_POS_SLICE] = rng.normal(0, 0.08, size=(2, 63))
        j, g = penetration3d_objective(frames, vol, sk)
        assert j > 0
        h = 1e-7
        checked = 0
        for slot in [0, 1, 2, 3, 4, 9, 10, 11, 30, 31]:
            fp = frames.copy(); fp[0, slot] += h
            fm = frames.copy(); fm[0, slot] -= h
            jp, _ = penetration3d_objective(fp, vol, sk)
            jm, _ = penetration3d_objective(fm, vol, sk)
            fd = (jp - jm) / (2 * h)
            if abs(fd) < 1e-6 and abs(g[0, slot]) < 1e-6:
                continue
            assert abs(fd - g[0, slot]) / max(abs(fd), 1e-6) < 1e-3
            checked += 1
        assert checked >= 4


class TestApplyGuidance:
    def test_zero_weights_identity(self):
        rng = np.random.default_rng(6)
        x = rand_frames(rng)
        out = apply_guidance(x, [], 5, GuidanceConfig.none())
        assert np.array_equal(out, x)

    def test_final_step_skipped(self):
        rng = np.random.default_rng(7)
        x = rand_frames(rng)
        g = rng.normal(size=x.shape)
        cfg = GuidanceConfig(goal_weight=30.0)
        out = apply_guidance(x, [(30.0, g)], 0, cfg)
        assert np.array_equal(out, x)
        out_on = apply_guidance(x, [(30.0, g)], 0,
                                GuidanceConfig(goal_weight=30.0, skip_final_step=False))
        assert not np.array_equal(out_on, x)

    def test_goal_closed_form(self):
        rng = np.random.default_rng(8)
        x = rand_frames(rng)
        goal = rng.normal(size=5)
        _, grad = goal_objective(x, goal)
        out = apply_guidance(x, [(30.0, grad)], 5, GuidanceConfig(goal_weight=30.0))
        expected_last = x[-1] - 30.0 * 2.0 * (x[-1] - goal)
        assert np.allclose(out[-1], expected_last, atol=1e-9)
        assert np.array_equal(out[:-1], x[:-1])

    def test_masked_frames_untouched(self):
        rng = np.random.default_rng(9)
        x = rand_frames(rng)
        goal = rng.normal(size=5)
        _, grad = goal_objective(x, goal)
        m = goal_mask(10, 5)
        out = apply_guidance(x, [(30.0, grad)], 5, GuidanceConfig(), mask=m)
        assert np.array_equal(out, x)  # the only gradient entry sits on a masked frame

    def test_small_alpha_decreases_quadratic(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            x = rand_frames(rng)
            goal = rng.normal(size=5)
            j0, grad = goal_objective(x, goal)
            out = apply_guidance(x, [(1e-3, grad)], 5, GuidanceConfig())
            j1, _ = goal_objective(out, goal)
            assert j1 < j0 or j0 == 0.0

    def test_nonfinite_gradient_aborts(self):
        x = np.zeros((4, 5))
        bad = np.full((4, 5), np.nan)
        from scenemotion.errors import SceneMotionError
        with pytest.raises(SceneMotionError):
            apply_guidance(x, [(1.0, bad)], 3, GuidanceConfig())


class TestBlend:
    def test_scale_zero_reproduces_path(self):
        rng = np.random.default_rng(11)
        x = rand_frames(rng, n=12)
        path = rng.normal(size=(12, 2))
        out = blend(x, BlendSpec(path, 0.0))
        assert np.array_equal(out[1:-1, 0], path[1:-1, 0])
        assert np.array_equal(out[1:-1, 2], path[1:-1, 1])
        # endpoints stay mask-dominated, y and heading untouched
        assert np.array_equal(out[[0, -1]], x[[0, -1]])
        assert np.array_equal(out[:, [1, 3, 4]], x[:, [1, 3, 4]])

    def test_scale_one_identity(self):
        rng = np.random.default_rng(12)
        x = rand_frames(rng, n=12)
        path = rng.normal(size=(12, 2))
        out = blend(x, BlendSpec(path, 1.0))
        assert np.array_equal(out, x)

    def test_midpoint(self):
        x = np.zeros((3, 5))
        x[1, 0], x[1, 2] = 2.0, 2.0
        path = np.array([[0.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
        out = blend(x, BlendSpec(path, 0.5))
        assert out[1, 0] == 1.0 and out[1, 2] == 2.0

    def test_invalid_scale(self):
        with pytest.raises(ValidationError):
            BlendSpec(np.zeros((5, 2)), 1.5)


class TestBlendComposition:
    def test_projection_family(self):
        # blend(blend(x, s), s') == blend(x, s * s') for a shared path
        rng = np.random.default_rng(13)
        x = rand_frames(rng, n=12)
        path = rng.normal(size=(12, 2))
        for s, s2 in [(0.5, 0.5), (0.8, 0.25), (0.0, 0.7), (1.0, 0.3)]:
            once = blend(blend(x, BlendSpec(path, s)), BlendSpec(path, s2))
            direct = blend(x, BlendSpec(path, s * s2))
            assert np.allclose(once, direct, atol=1e-12)
