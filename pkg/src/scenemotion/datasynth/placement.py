"""Random rigid placement of canonical motions into scenes, plus mirroring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import (
    ANG_VEL_INDEX, CONTACT_SLICE, JOINT_POS_SLICE, JOINT_ROT_SLICE,
    JOINT_VEL_SLICE, LIN_VEL_SLICE, BodyMotion, RigidTransform2D,
    RootTrajectory,
)
from ..geometry import DistanceField2D, FloorMap, distance_transform, query_field_many


@dataclass(frozen=True)
class PlacementRecord:
    motion_id: str
    scene_id: str
    transform: RigidTransform2D
    mirrored: bool
    style_label: str


def placement_collision_free(traj_frames: np.ndarray, field: DistanceField2D,
                             clearance: float) -> bool:
    vals, _ = query_field_many(field, traj_frames[:, [0, 2]])
    return bool(np.all(vals <= -clearance))


def place_motion(traj: RootTrajectory, fmap: FloorMap, seed: int,
                 clearance: float = 0.1, max_tries: int = 100,
                 field: DistanceField2D | None = None) -> RigidTransform2D | None:
    """Sample a rigid transform landing every frame at least `clearance`
    inside the walkable region; None after max_tries rejections."""
    if field is None:
        field = distance_transform(fmap)
    rng = np.random.default_rng(seed)
    x0, z0 = fmap.origin
    x1 = x0 + fmap.width * fmap.cell
    z1 = z0 + fmap.height * fmap.cell
    for _ in range(max_tries):
        ang = rng.uniform(0.0, 2.0 * np.pi)
        t = RigidTransform2D(
            tx=float(rng.uniform(x0, x1)), tz=float(rng.uniform(z0, z1)),
            cos_r=float(np.cos(ang)), sin_r=float(np.sin(ang)))
        placed = t.apply_frames(traj.frames)
        if placement_collision_free(placed, field, clearance):
            return t
    return None


def mirror_transform(t: RigidTransform2D) -> RigidTransform2D:
    """Conjugate a placement by the x -> -x reflection."""
    return RigidTransform2D(tx=-t.tx, tz=t.tz, cos_r=t.cos_r, sin_r=-t.sin_r)


def mirror_trajectory(traj: RootTrajectory) -> RootTrajectory:
    frames = np.array(traj.frames)
    frames[:, 0] = -frames[:, 0]
    frames[:, 4] = -frames[:, 4]
    return RootTrajectory(frames, traj.frame_rate)


def mirror_style_label(label: str) -> str:
    if "left" in label:
        return label.replace("left", "right")
    if "right" in label:
        return label.replace("right", "left")
    return label


def mirror_motion(motion: BodyMotion) -> BodyMotion:
    """Left-right mirror on all 268 channels (an exact involution).

    World x negates, the heading angle negates, root-local blocks negate
    their x component, and left/right joint rows swap.
    """
    f = np.array(motion.frames)
    sk = motion.skeleton
    f[:, 0] = -f[:, 0]
    f[:, 4] = -f[:, 4]
    f[:, ANG_VEL_INDEX] = -f[:, ANG_VEL_INDEX]
    f[:, LIN_VEL_SLICE.start] = -f[:, LIN_VEL_SLICE.start]  # local x velocity

    n = f.shape[0]
    jp = f[:, JOINT_POS_SLICE].reshape(n, 21, 3)
    jv = f[:, JOINT_VEL_SLICE].reshape(n, 22, 3)
    jr = f[:, JOINT_ROT_SLICE].reshape(n, 21, 6)
    jp[:, :, 0] = -jp[:, :, 0]
    jv[:, :, 0] = -jv[:, :, 0]
    # conjugating a rotation by the x-reflection negates entries r10, r20, r01
    jr[:, :, 1] = -jr[:, :, 1]
    jr[:, :, 2] = -jr[:, :, 2]
    jr[:, :, 3] = -jr[:, :, 3]
    for a, b in sk.mirror_pairs:
        jv[:, [a, b]] = jv[:, [b, a]]
        # joint_pos/rot blocks exclude the pelvis; shift indices by one
        jp[:, [a - 1, b - 1]] = jp[:, [b - 1, a - 1]]
        jr[:, [a - 1, b - 1]] = jr[:, [b - 1, a - 1]]
    f[:, JOINT_POS_SLICE] = jp.reshape(n, -1)
    f[:, JOINT_VEL_SLICE] = jv.reshape(n, -1)
    f[:, JOINT_ROT_SLICE] = jr.reshape(n, -1)

    contacts = f[:, CONTACT_SLICE]
    f[:, CONTACT_SLICE] = contacts[:, [2, 3, 0, 1]]  # swap L/R ankle+toe pairs
    return BodyMotion(f, motion.frame_rate, sk)
