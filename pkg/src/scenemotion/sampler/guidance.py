"""Analytic test-time guidance objectives and the clean-prediction update.

All objectives are evaluated in meters on the predicted clean motion. The
update is x~0 = x0_hat - sum_k alpha_k * grad J_k, applied directly to the
prediction (no backprop through the denoiser).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import JOINT_POS_SLICE, rotate_world_to_local
from ..errors import SceneMotionError, ValidationError
from ..geometry import DistanceField2D, ObjectVolume, query_field_many, query_volume_many
from .masking import FrameMask

# six axis-aligned surface points per proxy sphere
_PROXY_DIRS = np.array([
    [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
], dtype=np.float64)


@dataclass(frozen=True)
class GuidanceConfig:
    """Objective weights; navigation and interaction use different defaults.

    goal_gradient selects the perturbation direction for the goal term:
    "prediction" differentiates the objective with respect to the clean
    prediction directly (cheap, but inert when the goal frame is in-painted
    and repelling at low noise for large weights), "input" backpropagates
    through the denoiser to the noisy input, which spreads the goal signal
    over every frame and stays stable at the stock weight.
    """

    goal_weight: float = 30.0
    collision_weight: float = 1000.0
    sdf_weight: float = 0.0
    skip_final_step: bool = True
    include_goal_height: bool = True
    goal_gradient: str = "prediction"  # "prediction" | "input"

    def __post_init__(self):
        if self.goal_weight < 0 or self.collision_weight < 0 or self.sdf_weight < 0:
            raise ValidationError("guidance weights must be >= 0")
        if self.goal_gradient not in ("prediction", "input"):
            raise ValidationError(f"unknown goal_gradient {self.goal_gradient!r}")

    @staticmethod
    def navigation(goal_weight: float = 30.0, collision_weight: float = 1000.0,
                   **kw) -> "GuidanceConfig":
        return GuidanceConfig(goal_weight=goal_weight, collision_weight=collision_weight,
                              sdf_weight=0.0, **kw)

    @staticmethod
    def interaction(goal_weight: float = 1000.0, sdf_weight: float = 10.0,
                    **kw) -> "GuidanceConfig":
        return GuidanceConfig(goal_weight=goal_weight, collision_weight=0.0,
                              sdf_weight=sdf_weight, **kw)

    @staticmethod
    def none() -> "GuidanceConfig":
        return GuidanceConfig(goal_weight=0.0, collision_weight=0.0, sdf_weight=0.0)


def goal_objective(x0_hat: np.ndarray, goal: np.ndarray,
                   include_height: bool = True) -> tuple[float, np.ndarray]:
    """Squared endpoint error on the final frame only.

    goal is a 5-vector (x, y, z, cos, sin); y participates only when
    include_height is set. The gradient is zero on every other frame.
    """
    slots = [0, 1, 2, 3, 4] if include_height else [0, 2, 3, 4]
    err = x0_hat[-1, slots] - np.asarray(goal, dtype=np.float64)[slots]
    j = float(np.dot(err, err))
    grad = np.zeros_like(x0_hat)
    grad[-1, slots] = 2.0 * err
    return j, grad


def collision2d_objective(x0_hat: np.ndarray,
                          field: DistanceField2D) -> tuple[float, np.ndarray]:
    """Mean positive walkable-field distance over frames; zero when inside."""
    xz = x0_hat[:, [0, 2]]
    vals, grads = query_field_many(field, xz)
    n = x0_hat.shape[0]
    bad = vals > 0.0
    j = float(vals[bad].sum() / n)
    grad = np.zeros_like(x0_hat)
    grad[bad, 0] = grads[bad, 0] / n
    grad[bad, 2] = grads[bad, 1] / n
    return j, grad


def proxy_points(joints: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Six sphere-surface points per joint: (N, J, 6, 3)."""
    offsets = radii[None, :, None, None] * _PROXY_DIRS[None, None, :, :]
    return joints[:, :, None, :] + offsets


def penetration_objective_joints(joints: np.ndarray, vol: ObjectVolume,
                                 radii: np.ndarray) -> tuple[float, np.ndarray]:
    """Penetration loss and its gradient with respect to world joints.

    J is the mean depth (-sdf) over penetrating proxy points; the gradient
    pushes joints along +grad(sdf). Zero when the body is fully outside.
    """
    n, j, _ = joints.shape
    pts = proxy_points(joints, radii).reshape(-1, 3)
    vals, grads = query_volume_many(vol, pts)
    pen = vals < 0.0
    djoints = np.zeros_like(joints)
    if not np.any(pen):
        return 0.0, djoints
    count = int(pen.sum())
    loss = float((-vals[pen]).sum() / count)
    dpts = np.zeros_like(pts)
    dpts[pen] = -grads[pen] / count
    djoints[:] = dpts.reshape(n, j, 6, 3).sum(axis=2)
    return loss, djoints


def penetration3d_objective(frames: np.ndarray, vol: ObjectVolume,
                            skeleton) -> tuple[float, np.ndarray]:
    """Penetration loss on (N, 268) body channels, gradient via the pose codec.

    World joints decode as pelvis + R(heading) @ local, so the chain rule
    spreads each joint gradient over the pelvis position, the heading pair
    and the root-relative joint block.
    """
    from ..core import joints_world  # local import avoids a cycle

    frames = np.asarray(frames, dtype=np.float64)
    joints = joints_world(frames)
    loss, dj = penetration_objective_joints(joints, vol, skeleton.joint_radii)
    grad = np.zeros_like(frames)
    if loss == 0.0:
        return loss, grad
    n = frames.shape[0]
    local = frames[:, JOINT_POS_SLICE].reshape(n, 21, 3)
    cos_h, sin_h = frames[:, 3], frames[:, 4]
    # pelvis moves every joint
    grad[:, 0:3] = dj.sum(axis=1)
    g_rest = dj[:, 1:, :]
    gx, gz = g_rest[..., 0], g_rest[..., 2]
    lx, lz = local[..., 0], local[..., 2]
    # world = (c lx + s lz, ly, -s lx + c lz)
    grad[:, 3] = (gx * lx + gz * lz).sum(axis=1)
    grad[:, 4] = (gx * lz - gz * lx).sum(axis=1)
    dlocal = rotate_world_to_local(g_rest, cos_h[:, None], sin_h[:, None])
    grad[:, JOINT_POS_SLICE] = dlocal.reshape(n, 63)
    return loss, grad


def apply_guidance(x0_hat: np.ndarray, objectives, t: int, config: GuidanceConfig,
                   mask: FrameMask | None = None) -> np.ndarray:
    """Perturb the clean prediction down the weighted objective gradients.

    objectives: iterable of (weight, gradient) pairs. Identity at the final
    denoising step (t == 0) when skip_final_step is set; masked (known)
    channels are never modified.
    """
    if t == 0 and config.skip_final_step:
        return np.array(x0_hat, copy=True)
    step = np.zeros_like(x0_hat)
    for weight, grad in objectives:
        if weight == 0.0:
            continue
        if not np.all(np.isfinite(grad)):
            raise SceneMotionError(f"non-finite guidance gradient at step t={t}")
        step += weight * grad
    if mask is not None:
        step[mask.m] = 0.0
    return x0_hat - step
