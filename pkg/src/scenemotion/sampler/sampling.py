"""Reverse-diffusion sampling with in-painting, guidance and path blending.

The loop runs t = T-1 .. 0 in standardized space. Every iteration masks the
known endpoint values into the input, predicts the clean motion, applies
guidance and blending in meters, and takes a posterior step; the t = 0
iteration's (blended) prediction is the final output. Masked channels of the
returned motion are pinned to the exact requested start/goal values and all
headings are re-normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..core import (
    BODY_WIDTH, ROOT_WIDTH, BodyMotion, BodyPose, GoalSpec, RootPose,
    RootTrajectory, Skeleton, default_skeleton, encode_pose_vector,
    joints_world, normalize_heading_rows,
)
from ..errors import ValidationError
from ..geometry import DistanceField2D, ObjectVolume, compute_human_bps_fast
from ..denoiser.model import DenoiserParams, forward
from ..denoiser.nn import F32
from .blend import BlendSpec, blend
from .guidance import (
    GuidanceConfig, apply_guidance, collision2d_objective, goal_objective,
    penetration3d_objective,
)
from .masking import FrameMask, goal_mask, interaction_goal_mask, mask_inputs, pin_masked, start_only_mask
from .schedule import DiffusionSchedule, posterior_step

SNAPSHOT_EVERY = 10


@dataclass
class SceneContext:
    """Everything the sampler may need to know about the scene.

    Navigation uses the walkable field (guidance) plus a coarse conditioning
    grid for the control branch; interaction uses the object volume, the BPS
    basis and the precomputed object-bps vector.
    """

    field: DistanceField2D | None = None
    cond_grid: np.ndarray | None = None  # (H, W) float32 walkability
    cond_origin: tuple[float, float] | None = None
    cond_cell: float | None = None
    volume: ObjectVolume | None = None
    basis_points: np.ndarray | None = None  # (K, 3)
    object_bps: np.ndarray | None = None  # (K,)
    skeleton: Skeleton | None = None
    _feat_grid: list = dc_field(default_factory=list, repr=False)  # encode cache


@dataclass
class SampleResult:
    motion: RootTrajectory | BodyMotion
    raw_frames: np.ndarray  # final prediction in meters, before endpoint pinning
    snapshots: list = dc_field(default_factory=list)  # (step, frames-in-meters)


def _known_values(goal: GoalSpec, pose_width: int) -> np.ndarray:
    known = np.zeros((goal.horizon, pose_width), dtype=np.float64)
    start = goal.start
    if isinstance(start, BodyPose):
        if pose_width != BODY_WIDTH:
            raise ValidationError("body start pose with a root-only model")
        known[0] = encode_pose_vector(start)
    elif isinstance(start, RootPose):
        known[0, :ROOT_WIDTH] = start.as_vector()
    else:
        raise ValidationError(f"unsupported start pose {type(start).__name__}")
    known[-1, :ROOT_WIDTH] = goal.goal.as_vector()
    return known


def _build_mask(mask_mode: str, n: int, pose_width: int) -> FrameMask:
    if mask_mode == "goal":
        if pose_width == BODY_WIDTH:
            return interaction_goal_mask(n, pose_width)
        return goal_mask(n, pose_width)
    if mask_mode == "start_only":
        return start_only_mask(n, pose_width)
    raise ValidationError(f"unknown mask mode {mask_mode!r}")


def _scene_payload(params: DenoiserParams, scene: SceneContext | None,
                   x_in: np.ndarray):
    cfg = params.config
    if scene is None or params.control is None:
        return None
    if cfg.scene_mode == "floor":
        if scene.cond_grid is None:
            return None
        b = x_in.shape[0]
        meters = params.destandardize(x_in[..., :cfg.pose_width].astype(np.float64))
        key = id(params.control)
        if not scene._feat_grid or scene._feat_grid[0][0] != key:
            from ..denoiser.model import encode_floor_map
            feat, _ = encode_floor_map(params.control, scene.cond_grid)
            scene._feat_grid.clear()
            scene._feat_grid.append((key, feat))
        return {
            "feat_grids": [scene._feat_grid[0][1]] * b,
            "origins": [scene.cond_origin] * b,
            "cells": [scene.cond_cell] * b,
            "positions": meters[:, :, [0, 2]],
        }
    if cfg.scene_mode == "object":
        if scene.basis_points is None or scene.object_bps is None:
            return None
        motion_std = x_in[..., :cfg.pose_width]
        meters = params.destandardize(motion_std.astype(np.float64))
        b, n = meters.shape[0], meters.shape[1]
        k = len(scene.object_bps)
        tokens = np.empty((b, n, cfg.pose_width + 2 * k), dtype=F32)
        tokens[..., :cfg.pose_width] = motion_std
        for i in range(b):
            joints = joints_world(meters[i])
            tokens[i, :, cfg.pose_width:cfg.pose_width + k] = \
                compute_human_bps_fast(joints, scene.basis_points)
            tokens[i, :, cfg.pose_width + k:] = scene.object_bps
        return {"tokens": tokens}
    return None


def _objectives(frames_m: np.ndarray, goal_vec: np.ndarray, scene: SceneContext | None,
                guidance: GuidanceConfig, skeleton: Skeleton,
                include_goal: bool = True):
    objs = []
    if include_goal and guidance.goal_weight > 0.0:
        _, g = goal_objective(frames_m, goal_vec, guidance.include_goal_height)
        objs.append((guidance.goal_weight, g))
    if guidance.collision_weight > 0.0 and scene is not None and scene.field is not None:
        _, g = collision2d_objective(frames_m, scene.field)
        objs.append((guidance.collision_weight, g))
    if guidance.sdf_weight > 0.0 and scene is not None and scene.volume is not None:
        _, g = penetration3d_objective(frames_m, scene.volume, skeleton)
        objs.append((guidance.sdf_weight, g))
    return objs


def sample_batch(params: DenoiserParams, schedule: DiffusionSchedule, goal: GoalSpec,
                 scene: SceneContext | None = None,
                 guidance: GuidanceConfig = GuidanceConfig.none(),
                 blend_spec: BlendSpec | None = None, seeds=(0,),
                 mask_mode: str = "goal", cfg_scale: float | None = None,
                 frame_rate: float = 20.0,
                 clip_sigma: float | None = 4.0) -> list[SampleResult]:
    """Sample one motion per seed for a single goal/scene (vectorized batch).

    clip_sigma clamps the (guided) clean prediction to mean +- clip_sigma * std
    per channel before the posterior step, the usual clip-denoised stabilizer;
    without it a strong guidance weight can push the chain off-manifold where
    the denoiser stops listening. Clipping runs before blending so an exact
    user path always survives.
    """
    cfg = params.config
    n, pw = cfg.max_frames, cfg.pose_width
    if goal.horizon != n:
        raise ValidationError(f"horizon {goal.horizon} != model frames {n}")
    skeleton = (scene.skeleton if scene is not None and scene.skeleton is not None
                else default_skeleton())
    known_m = _known_values(goal, pw)
    mask = _build_mask(mask_mode, n, pw)
    known_std = params.standardize(known_m).astype(F32)
    goal_vec = goal.goal.as_vector()
    style_idx = goal.style_index

    b = len(seeds)
    rngs = [np.random.default_rng(int(s)) for s in seeds]
    x_t = np.stack([r.standard_normal(size=(n, pw)) for r in rngs]).astype(F32)
    if blend_spec is not None and blend_spec.path.shape[0] != n:
        from ..geometry import resample_polyline
        blend_spec = BlendSpec(resample_polyline(blend_spec.path, n), blend_spec.scale)

    styles = np.full(b, style_idx, dtype=np.int64)
    uncond = np.zeros(b, dtype=np.int64)
    snapshots: list[list] = [[] for _ in range(b)]
    final_m = None
    if clip_sigma is not None:
        clip_lo = params.mean - clip_sigma * params.std
        clip_hi = params.mean + clip_sigma * params.std

    input_goal = guidance.goal_gradient == "input" and guidance.goal_weight > 0.0
    unmasked = 1.0 - mask.m.astype(np.float64)

    for t in range(schedule.T - 1, -1, -1):
        x_in = np.stack([mask_inputs(x_t[i], known_std, mask) for i in range(b)]).astype(F32)
        t_arr = np.full(b, t, dtype=np.int64)
        payload = _scene_payload(params, scene, x_in)
        goal_active = input_goal and (t > 0 or not guidance.skip_final_step)
        y, cache = forward(params, x_in, t_arr, styles, payload,
                           need_cache=goal_active)
        if cfg_scale is not None:
            y_u, _ = forward(params, x_in, t_arr, uncond, payload)
            y = y_u + F32(cfg_scale) * (y - y_u)
        x0_m = params.destandardize(y.astype(np.float64))
        if goal_active:
            # the paper-style goal term: backprop the endpoint error through
            # the denoiser to the noisy input and step the prediction along it
            from ..denoiser.model import input_gradient
            slots = [0, 1, 2, 3, 4] if guidance.include_goal_height else [0, 2, 3, 4]
            dy = np.zeros((b, n, pw), dtype=np.float64)
            for i in range(b):
                err = x0_m[i, -1, slots] - goal_vec[slots]
                dy[i, -1, slots] = 2.0 * err * params.std[slots]
            dx_in = input_gradient(params, cache, dy.astype(F32))
            step_std = guidance.goal_weight * dx_in[..., :pw].astype(np.float64) * unmasked
            x0_m = params.destandardize(y.astype(np.float64) - step_std)
        guided = np.empty_like(x0_m)
        for i in range(b):
            objs = _objectives(x0_m[i], goal_vec, scene, guidance, skeleton,
                               include_goal=not input_goal)
            g = apply_guidance(x0_m[i], objs, t, guidance, mask=mask)
            if clip_sigma is not None:
                g = np.clip(g, clip_lo, clip_hi)
            if blend_spec is not None:
                g = blend(g, blend_spec)
            guided[i] = g
        if t % SNAPSHOT_EVERY == 0:
            for i in range(b):
                snapshots[i].append((t, guided[i].copy()))
        if t > 0:
            x0_std = params.standardize(guided).astype(F32)
            for i in range(b):
                x_t[i] = posterior_step(schedule, x_t[i], x0_std[i], t, rngs[i])
        else:
            final_m = guided

    results = []
    for i in range(b):
        raw = final_m[i]
        normalized = normalize_heading_rows(raw, strict=False)
        pinned = pin_masked(normalized, known_m, mask)
        if pw == BODY_WIDTH:
            motion = BodyMotion(pinned, frame_rate, skeleton)
        else:
            motion = RootTrajectory(pinned, frame_rate)
        snaps = snapshots[i]
        snaps[-1] = (0, pinned)
        results.append(SampleResult(motion=motion, raw_frames=raw, snapshots=snaps))
    return results


def sample(params: DenoiserParams, schedule: DiffusionSchedule, goal: GoalSpec,
           scene: SceneContext | None = None,
           guidance: GuidanceConfig = GuidanceConfig.none(),
           blend_spec: BlendSpec | None = None, seed: int = 0,
           mask_mode: str = "goal", cfg_scale: float | None = None,
           frame_rate: float = 20.0, clip_sigma: float | None = 4.0) -> SampleResult:
    """Single-seed convenience wrapper around sample_batch."""
    return sample_batch(params, schedule, goal, scene, guidance, blend_spec,
                        seeds=(seed,), mask_mode=mask_mode, cfg_scale=cfg_scale,
                        frame_rate=frame_rate, clip_sigma=clip_sigma)[0]
