"""Base-model training and scene-aware control-branch fine-tuning."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..core import joints_world
from ..errors import TrainingError, ValidationError
from ..geometry import compute_human_bps_fast
from ..sampler.masking import FrameMask, goal_mask, mask_inputs, start_only_mask
from ..sampler.schedule import DiffusionSchedule, cosine_schedule
from .model import DenoiserConfig, DenoiserParams, backward, forward, init_base_params, init_control_params, params_hash
from .nn import F32, Adam

STD_FLOOR = 1e-3  # keeps near-constant channels from exploding under standardization


@dataclass(frozen=True)
class TrainSettings:
    batch_size: int = 32
    lr: float = 1e-4
    style_dropout: float = 0.1
    # fraction of samples trained with the goal frame unmasked, so sampling
    # with guidance-only goals stays in distribution
    goal_mask_dropout: float = 0.2
    log_every: int = 500


def compute_standardization(motions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean/std over all frames, with a floor on tiny stds."""
    flat = motions.reshape(-1, motions.shape[-1])
    mean = flat.mean(axis=0)
    std = np.maximum(flat.std(axis=0), STD_FLOOR)
    return mean.astype(np.float64), std.astype(np.float64)


@dataclass
class SceneBatchBuilder:
    """Builds the control-branch scene payload for a noisy masked batch."""

    mode: str  # "floor" | "object"
    # floor: one (grid, origin, cell) per dataset item
    floors: list | None = None
    # object: per-item object-bps vectors; the basis is shared offsets around
    # per-item centers, so human-bps features batch across items
    object_bps: np.ndarray | None = None  # (M, K)
    basis_offsets: np.ndarray | None = None  # (K, 3)
    basis_centers: np.ndarray | None = None  # (M, 3)

    def build(self, params: DenoiserParams, idx: np.ndarray, x_in: np.ndarray):
        if self.mode == "floor":
            pw = params.config.pose_width
            motion = x_in[..., :pw].astype(np.float64)
            meters = params.destandardize(motion)
            positions = meters[:, :, [0, 2]]
            return {
                "grids": [self.floors[i][0] for i in idx],
                "origins": [self.floors[i][1] for i in idx],
                "cells": [self.floors[i][2] for i in idx],
                "positions": positions,
            }
        pw = params.config.pose_width
        motion_std = x_in[..., :pw]
        meters = params.destandardize(motion_std.astype(np.float64))
        b, n = meters.shape[0], meters.shape[1]
        k = self.object_bps.shape[1]
        tokens = np.empty((b, n, pw + 2 * k), dtype=F32)
        tokens[..., :pw] = motion_std
        # shift joints by each item's basis center; distances to the shared
        # offsets then batch across the whole minibatch
        shifted = np.empty((b, n, 22, 3))
        for row, i in enumerate(idx):
            shifted[row] = joints_world(meters[row]) - self.basis_centers[i]
            tokens[row, :, pw + k:] = self.object_bps[i]
        b_h = compute_human_bps_fast(shifted.reshape(b * n, 22, 3), self.basis_offsets)
        tokens[..., pw:pw + k] = b_h.reshape(b, n, k)
        return {"tokens": tokens}


def _prepare(motions: np.ndarray, params: DenoiserParams) -> np.ndarray:
    return params.standardize(np.asarray(motions, dtype=np.float64)).astype(F32)


def _masks_for_batch(cfg: DenoiserConfig, rng, settings: TrainSettings, b: int,
                     base_mask: FrameMask):
    keep = rng.random(b) >= settings.goal_mask_dropout
    start_only = start_only_mask(cfg.max_frames, cfg.pose_width)
    return [base_mask if k else start_only for k in keep]


def _training_step(params: DenoiserParams, x0_std: np.ndarray, styles: np.ndarray,
                   schedule: DiffusionSchedule, rng, settings: TrainSettings,
                   base_mask: FrameMask, scene_builder: SceneBatchBuilder | None,
                   train_base_branch: bool):
    cfg = params.config
    b = settings.batch_size
    m = x0_std.shape[0]
    idx = rng.integers(0, m, size=b)
    x0 = x0_std[idx]
    t_idx = rng.integers(0, schedule.T, size=b)
    eps = rng.standard_normal(size=x0.shape).astype(F32)
    ab = schedule.alpha_bar[t_idx].astype(F32)[:, None, None]
    x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps

    masks = _masks_for_batch(cfg, rng, settings, b, base_mask)
    x_in = np.stack([mask_inputs(x_t[i], x0[i], masks[i]) for i in range(b)]).astype(F32)

    style_idx = styles[idx].copy()
    drop = rng.random(b) < settings.style_dropout
    style_idx[drop] = 0  # the reserved unconditioned token

    scene = scene_builder.build(params, idx, x_in) if scene_builder is not None else None
    y, cache = forward(params, x_in, t_idx, style_idx, scene, need_cache=True)
    diff = y - x0
    loss = float((diff.astype(np.float64) ** 2).sum(axis=-1).mean())
    dy = (2.0 / (b * cfg.max_frames)) * diff
    grads = backward(params, cache, dy, train_base=train_base_branch,
                     train_control=scene_builder is not None)
    return loss, grads


def train_base(motions: np.ndarray, styles: np.ndarray, cfg: DenoiserConfig,
               steps: int, seed: int, schedule: DiffusionSchedule | None = None,
               settings: TrainSettings = TrainSettings(),
               callback=None) -> tuple[DenoiserParams, np.ndarray]:
    """Train the scene-agnostic base branch; deterministic given the seed.

    motions: (M, N, pose_width) canonical clean motions in meters.
    Returns the trained params (with standardization stats) and the loss curve.
    """
    motions = np.asarray(motions, dtype=np.float64)
    if motions.ndim != 3 or motions.shape[0] == 0:
        raise TrainingError("empty or malformed training dataset")
    if motions.shape[1] != cfg.max_frames or motions.shape[2] != cfg.pose_width:
        raise ValidationError(f"dataset shape {motions.shape} does not match config")
    styles = np.asarray(styles, dtype=np.int64)
    if schedule is None:
        schedule = cosine_schedule()

    mean, std = compute_standardization(motions)
    params = DenoiserParams(config=cfg, base=init_base_params(cfg, seed),
                            control=None, mean=mean, std=std)
    x0_std = _prepare(motions, params)
    rng = np.random.default_rng(seed + 1)
    adam = Adam(lr=settings.lr)
    base_mask = goal_mask(cfg.max_frames, cfg.pose_width)
    losses = np.empty(steps, dtype=np.float64)
    for step in range(steps):
        loss, grads = _training_step(params, x0_std, styles, schedule, rng,
                                     settings, base_mask, None, True)
        if not np.isfinite(loss):
            raise TrainingError(f"loss diverged to {loss} at step {step}")
        adam.step(params.base, grads)
        losses[step] = loss
        if callback is not None and (step % settings.log_every == 0 or step == steps - 1):
            callback(step, loss)
    return params, losses


def finetune_control(base: DenoiserParams, motions: np.ndarray, styles: np.ndarray,
                     scene_builder: SceneBatchBuilder, steps: int, seed: int,
                     schedule: DiffusionSchedule | None = None,
                     settings: TrainSettings = TrainSettings(),
                     interaction_mask: FrameMask | None = None,
                     callback=None) -> tuple[DenoiserParams, np.ndarray]:
    """Fine-tune a zero-initialized control branch on top of the frozen base.

    The base weights are reused by reference and verified unchanged through a
    content hash; only control parameters receive updates.
    """
    cfg = base.config
    if cfg.scene_mode == "none":
        raise ValidationError("config needs scene_mode 'floor' or 'object' for fine-tuning")
    motions = np.asarray(motions, dtype=np.float64)
    if motions.shape[0] == 0:
        raise TrainingError("empty scene dataset")
    base_hash = params_hash(base.base)
    params = DenoiserParams(config=cfg, base=base.base, frozen_base=True,
                            control=init_control_params(cfg, seed),
                            mean=base.mean, std=base.std)
    x0_std = _prepare(motions, params)
    styles = np.asarray(styles, dtype=np.int64)
    if schedule is None:
        schedule = cosine_schedule()
    rng = np.random.default_rng(seed + 2)
    adam = Adam(lr=settings.lr)
    base_mask = interaction_mask if interaction_mask is not None \
        else goal_mask(cfg.max_frames, cfg.pose_width)
    losses = np.empty(steps, dtype=np.float64)
    for step in range(steps):
        loss, grads = _training_step(params, x0_std, styles, schedule, rng,
                                     settings, base_mask, scene_builder, False)
        if not np.isfinite(loss):
            raise TrainingError(f"fine-tune loss diverged to {loss} at step {step}")
        adam.step(params.control, grads)
        losses[step] = loss
        if callback is not None and (step % settings.log_every == 0 or step == steps - 1):
            callback(step, loss)
    if params_hash(params.base) != base_hash:
        raise TrainingError("frozen base weights changed during fine-tuning")
    return params, losses


def eval_loss(params: DenoiserParams, motions: np.ndarray, styles: np.ndarray,
              seed: int = 0, schedule: DiffusionSchedule | None = None,
              scene_builder: SceneBatchBuilder | None = None,
              mask: FrameMask | None = None, batches: int = 8,
              settings: TrainSettings = TrainSettings()) -> float:
    """Reconstruction loss on a held-out set, without parameter updates."""
    if schedule is None:
        schedule = cosine_schedule()
    cfg = params.config
    x0_std = _prepare(np.asarray(motions, dtype=np.float64), params)
    styles = np.asarray(styles, dtype=np.int64)
    rng = np.random.default_rng(seed + 1000)
    base_mask = mask if mask is not None else goal_mask(cfg.max_frames, cfg.pose_width)
    quiet = replace(settings, style_dropout=0.0, goal_mask_dropout=0.0)
    total = 0.0
    for _ in range(batches):
        loss, _ = _training_step_eval(params, x0_std, styles, schedule, rng,
                                      quiet, base_mask, scene_builder)
        total += loss
    return total / batches


def _training_step_eval(params, x0_std, styles, schedule, rng, settings,
                        base_mask, scene_builder):
    cfg = params.config
    b = min(settings.batch_size, x0_std.shape[0])
    idx = rng.integers(0, x0_std.shape[0], size=b)
    x0 = x0_std[idx]
    t_idx = rng.integers(0, schedule.T, size=b)
    eps = rng.standard_normal(size=x0.shape).astype(F32)
    ab = schedule.alpha_bar[t_idx].astype(F32)[:, None, None]
    x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    x_in = np.stack([mask_inputs(x_t[i], x0[i], base_mask) for i in range(b)]).astype(F32)
    scene = scene_builder.build(params, idx, x_in) if scene_builder is not None else None
    y, _ = forward(params, x_in, t_idx, styles[idx], scene)
    diff = y - x0
    return float((diff.astype(np.float64) ** 2).sum(axis=-1).mean()), None
