import numpy as np
import pytest

from scenemotion.core import GoalSpec, RootPose, RootTrajectory
from scenemotion.denoiser import DenoiserConfig, DenoiserParams, init_base_params
from scenemotion.errors import ValidationError
from scenemotion.sampler import (
    BlendSpec, GuidanceConfig, SceneContext, cosine_schedule, sample,
    sample_batch,
)


def tiny_params(seed=0, n=12, zero_output=False, width=8):
    cfg = DenoiserConfig(pose_width=5, max_frames=n, model_width=width, layers=2,
                         heads=2, ffn_width=16, style_vocab_size=4)
    base = init_base_params(cfg, seed)
    if not zero_output:
        # the stock output head starts at zero; randomize it so the untrained
        # model produces seed-dependent output
        rng = np.random.default_rng(seed + 100)
        base["base.out.W"] = rng.normal(0, 0.3, size=base["base.out.W"].shape).astype(np.float32)
    return DenoiserParams(config=cfg, base=base, mean=np.zeros(5), std=np.ones(5))


def make_goal(n=12):
    return GoalSpec(start=RootPose(0.0, 0.9, 0.0, 1.0, 0.0),
                    goal=RootPose(1.5, 0.9, 2.0, 0.6, 0.8),
                    style_label="walk", horizon=n)


class TestSamplingLoop:
    def test_zero_model_yields_endpoints_only(self):
        params = tiny_params(zero_output=True)
        sched = cosine_schedule(20)
        goal = make_goal()
        res = sample(params, sched, goal, guidance=GuidanceConfig.none(), seed=3)
        frames = res.motion.frames
        start_vec = np.array([0.0, 0.9, 0.0, 1.0, 0.0])
        goal_vec = np.array([1.5, 0.9, 2.0, 0.6, 0.8])
        assert np.array_equal(frames[0], start_vec)
        assert np.array_equal(frames[-1], goal_vec)
        assert np.all(frames[1:-1] == 0.0)

    def test_masked_channels_exact(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        rng = np.random.default_rng(0)
        for case in range(10):
            theta_s, theta_g = rng.uniform(-np.pi, np.pi, 2)
            goal = GoalSpec(
                start=RootPose(*rng.normal(0, 1, 2), rng.normal(), np.cos(theta_s), np.sin(theta_s)),
                goal=RootPose(*rng.normal(0, 1, 2), rng.normal(), np.cos(theta_g), np.sin(theta_g)),
                style_label="walk", horizon=12)
            res = sample(params, sched, goal, seed=case)
            frames = res.motion.frames
            assert np.array_equal(frames[0], goal.start.as_vector())
            assert np.array_equal(frames[-1], goal.goal.as_vector())

    def test_deterministic_and_diverse(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        goal = make_goal()
        a = sample(params, sched, goal, seed=7)
        b = sample(params, sched, goal, seed=7)
        c = sample(params, sched, goal, seed=8)
        assert np.array_equal(a.motion.frames, b.motion.frames)
        assert not np.array_equal(a.motion.frames, c.motion.frames)

    def test_batch_matches_own_rerun_and_is_diverse(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        goal = make_goal()
        batch1 = sample_batch(params, sched, goal, seeds=(1, 2, 3))
        batch2 = sample_batch(params, sched, goal, seeds=(1, 2, 3))
        for r1, r2 in zip(batch1, batch2):
            assert np.array_equal(r1.motion.frames, r2.motion.frames)
        assert not np.array_equal(batch1[0].motion.frames, batch1[1].motion.frames)

    def test_blend_scale_zero_reproduces_path(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        goal = make_goal()
        n = 12
        path = np.linspace([0.0, 0.0], [1.5, 2.0], n)
        res = sample(params, sched, goal, blend_spec=BlendSpec(path, 0.0), seed=5)
        frames = res.motion.frames
        assert np.array_equal(frames[1:-1, 0], path[1:-1, 0])
        assert np.array_equal(frames[1:-1, 2], path[1:-1, 1])

    def test_blend_scale_one_bitwise_equals_unblended(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        goal = make_goal()
        path = np.linspace([0.0, 0.0], [1.5, 2.0], 12)
        with_blend = sample(params, sched, goal, blend_spec=BlendSpec(path, 1.0), seed=9)
        without = sample(params, sched, goal, seed=9)
        assert np.array_equal(with_blend.motion.frames, without.motion.frames)

    def test_zero_guidance_weights_bitwise_equal_no_guidance(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        goal = make_goal()
        a = sample(params, sched, goal, guidance=GuidanceConfig.none(), seed=4)
        b = sample(params, sched, goal,
                   guidance=GuidanceConfig(goal_weight=0.0, collision_weight=0.0,
                                           sdf_weight=0.0), seed=4)
        assert np.array_equal(a.motion.frames, b.motion.frames)

    def test_snapshot_count(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        res = sample(params, sched, make_goal(), seed=0)
        assert len(res.snapshots) == int(np.ceil(sched.T / 10))
        step, last = res.snapshots[-1]
        assert step == 0
        assert np.array_equal(last, res.motion.frames)

    def test_horizon_mismatch_errors(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        with pytest.raises(ValidationError):
            sample(params, sched, make_goal(n=13), seed=0)

    def test_output_is_trajectory_with_unit_headings(self):
        params = tiny_params()
        sched = cosine_schedule(20)
        res = sample(params, sched, make_goal(), seed=11)
        assert isinstance(res.motion, RootTrajectory)
        h = res.motion.frames[1:-1, 3] ** 2 + res.motion.frames[1:-1, 4] ** 2
        assert np.allclose(h, 1.0, atol=1e-9)
