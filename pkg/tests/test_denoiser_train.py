import numpy as np
import pytest

from scenemotion.denoiser import (
    DenoiserConfig, SceneBatchBuilder, TrainSettings, checkpoint_from_bytes,
    checkpoint_to_bytes, eval_loss, finetune_control, params_hash, train_base,
)
from scenemotion.denoiser.train import _training_step, compute_standardization
from scenemotion.errors import TrainingError
from scenemotion.sampler import cosine_schedule
from scenemotion.sampler.masking import goal_mask


def toy_config(n=20, scene_mode="none"):
    return DenoiserConfig(pose_width=5, max_frames=n, model_width=16, layers=2,
                          heads=2, ffn_width=32, style_vocab_size=4,
                          scene_feature_width=8, scene_mode=scene_mode)


def toy_motions(rng, m=16, n=20):
    """Smooth forward walks with a style-dependent bend."""
    motions = np.zeros((m, n, 5))
    styles = rng.integers(1, 4, size=m)
    for i in range(m):
        speed = 0.05 + 0.02 * styles[i]
        bend = rng.normal(0, 0.3)
        ts = np.arange(n)
        motions[i, :, 0] = bend * (ts / n) ** 2
        motions[i, :, 2] = speed * ts
        motions[i, :, 1] = 0.9
        heading = np.arctan2(np.gradient(motions[i, :, 0]), np.gradient(motions[i, :, 2]))
        motions[i, :, 3] = np.cos(heading)
        motions[i, :, 4] = np.sin(heading)
    return motions, styles


class TestTrainBase:
    def test_overfit_single_sample(self):
        rng = np.random.default_rng(0)
        motions, styles = toy_motions(rng, m=1)
        cfg = toy_config()
        settings = TrainSettings(batch_size=8, lr=3e-3, style_dropout=0.0,
                                 goal_mask_dropout=0.0)
        params, losses = train_base(motions, styles, cfg, steps=500, seed=1,
                                    settings=settings)
        assert losses[-10:].mean() < 0.1 * losses[0]

    def test_initial_loss_near_pose_width(self):
        # standardized channels have unit variance, so the first-step loss is
        # roughly E||x0||^2 = pose_width
        rng = np.random.default_rng(1)
        motions, styles = toy_motions(rng, m=32)
        cfg = toy_config()
        _, losses = train_base(motions, styles, cfg, steps=1, seed=2,
                               settings=TrainSettings(batch_size=32))
        assert 0.5 * 5 < losses[0] < 2.0 * 5

    def test_same_seed_identical_checkpoints(self):
        rng = np.random.default_rng(2)
        motions, styles = toy_motions(rng, m=8)
        cfg = toy_config()
        p1, _ = train_base(motions, styles, cfg, steps=20, seed=3)
        p2, _ = train_base(motions, styles, cfg, steps=20, seed=3)
        assert checkpoint_to_bytes(p1) == checkpoint_to_bytes(p2)
        p3, _ = train_base(motions, styles, cfg, steps=20, seed=4)
        assert checkpoint_to_bytes(p1) != checkpoint_to_bytes(p3)

    def test_empty_dataset_errors(self):
        with pytest.raises(TrainingError):
            train_base(np.zeros((0, 20, 5)), np.zeros(0), toy_config(), 10, 0)

    def test_standardization_floor(self):
        motions = np.zeros((4, 20, 5))
        motions[:, :, 1] = 0.9  # constant channel
        mean, std = compute_standardization(motions)
        assert std.min() >= 1e-3
        assert mean[1] == pytest.approx(0.9)


def scene_dataset(rng, m=24, n=20):
    """Motions that bend away from a wall whose side varies per sample."""
    motions = np.zeros((m, n, 5))
    styles = np.ones(m, dtype=np.int64)
    floors = []
    for i in range(m):
        side = 1.0 if i % 2 == 0 else -1.0
        ts = np.arange(n) / n
        motions[i, :, 0] = side * 0.8 * np.sin(np.pi * ts)
        motions[i, :, 2] = 1.6 * ts
        motions[i, :, 1] = 0.9
        motions[i, :, 3] = 1.0
        grid = np.ones((16, 16), dtype=np.float32)
        half = slice(0, 8) if side > 0 else slice(8, 16)
        grid[half, 6:10] = 0.0  # obstacle on the side the motion avoids
        floors.append((grid, (-0.8, -0.2), 0.1))
    return motions, styles, floors


class TestFinetuneControl:
    def test_frozen_base_and_improvement(self):
        rng = np.random.default_rng(3)
        motions, styles, floors = scene_dataset(rng)
        cfg = toy_config(scene_mode="floor")
        settings = TrainSettings(batch_size=8, lr=2e-3, style_dropout=0.0,
                                 goal_mask_dropout=0.0)
        base, _ = train_base(motions, styles, cfg, steps=250, seed=5, settings=settings)
        base_hash = params_hash(base.base)
        builder = SceneBatchBuilder(mode="floor", floors=floors)
        tuned, losses = finetune_control(base, motions, styles, builder,
                                         steps=350, seed=6, settings=settings)
        assert params_hash(tuned.base) == base_hash
        zsum = sum(float(np.abs(v).sum()) for k, v in tuned.control.items()
                   if k.startswith("zproj"))
        assert zsum > 0.0
        base_loss = eval_loss(base, motions, styles, seed=7)
        tuned_loss = eval_loss(tuned, motions, styles, seed=7, scene_builder=builder)
        assert tuned_loss <= base_loss + 1e-9

    def test_step0_finetune_loss_equals_base_loss(self):
        rng = np.random.default_rng(4)
        motions, styles, floors = scene_dataset(rng, m=8)
        cfg = toy_config(scene_mode="floor")
        settings = TrainSettings(batch_size=4)
        base, _ = train_base(motions, styles, cfg, steps=10, seed=8, settings=settings)

        from scenemotion.denoiser.model import DenoiserParams, init_control_params
        sched = cosine_schedule()
        mean, std = base.mean, base.std
        augmented = DenoiserParams(config=cfg, base=base.base,
                                   control=init_control_params(cfg, 9),
                                   mean=mean, std=std)
        x0_std = base.standardize(motions).astype(np.float32)
        builder = SceneBatchBuilder(mode="floor", floors=floors)
        mask = goal_mask(cfg.max_frames, cfg.pose_width)
        loss_aug, _ = _training_step(augmented, x0_std, styles, sched,
                                     np.random.default_rng(42), settings, mask,
                                     builder, False)
        loss_base, _ = _training_step(base, x0_std, styles, sched,
                                      np.random.default_rng(42), settings, mask,
                                      None, True)
        assert loss_aug == loss_base


class TestCheckpoint:
    def test_roundtrip_exact(self):
        rng = np.random.default_rng(5)
        motions, styles = toy_motions(rng, m=4)
        params, _ = train_base(motions, styles, toy_config(), steps=5, seed=10)
        blob = checkpoint_to_bytes(params)
        loaded = checkpoint_from_bytes(blob)
        assert params_hash(loaded.base) == params_hash(params.base)
        assert np.array_equal(loaded.mean, params.mean)
        assert np.array_equal(loaded.std, params.std)
        assert loaded.config == params.config
        assert checkpoint_to_bytes(loaded) == blob


class TestDivergenceAbort:
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nan_loss_aborts_with_diagnostics(self):
        rng = np.random.default_rng(9)
        motions, styles = toy_motions(rng, m=4)
        # an absurd learning rate reliably overflows float32 within a few steps
        settings = TrainSettings(batch_size=4, lr=1e12)
        with pytest.raises(TrainingError, match="diverged"):
            train_base(motions, styles, toy_config(), steps=200, seed=11,
                       settings=settings)
