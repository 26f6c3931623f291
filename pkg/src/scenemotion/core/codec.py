"""Pose-layout codecs and coordinate canonicalization."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError
from .types import (
    ABS_SLICE, ANG_VEL_INDEX, BODY_WIDTH, CONTACT_SLICE, HEIGHT_INDEX,
    JOINT_POS_SLICE, JOINT_ROT_SLICE, JOINT_VEL_SLICE, LIN_VEL_SLICE,
    ROOT_WIDTH, BodyPose, RigidTransform2D, RootPose, RootTrajectory,
)  # noqa: F401 - ROOT_WIDTH is part of the codec's public surface

DEGENERATE_EPS = 1e-12


def normalize_heading(pose: RootPose) -> RootPose:
    """Rescale (cos_h, sin_h) onto the unit circle without changing the angle."""
    n = math.hypot(pose.cos_h, pose.sin_h)
    if n < DEGENERATE_EPS:
        raise ValidationError("degenerate heading: (cos_h, sin_h) is the zero vector")
    return RootPose(pose.x, pose.y, pose.z, pose.cos_h / n, pose.sin_h / n)


def normalize_heading_rows(frames: np.ndarray, strict: bool = True) -> np.ndarray:
    """Vectorized heading normalization over (N, >=5) frame rows (in place copy).

    With strict=False degenerate rows pass through unchanged instead of
    raising (a zero-output model produces exactly-zero heading pairs).
    """
    out = np.array(frames, dtype=np.float64)
    n = np.hypot(out[:, 3], out[:, 4])
    bad = n < DEGENERATE_EPS
    if np.any(bad):
        if strict:
            raise ValidationError("degenerate heading in frame rows")
        n[bad] = 1.0
    out[:, 3] /= n
    out[:, 4] /= n
    return out


def canonicalize_trajectory(traj: RootTrajectory) -> tuple[RootTrajectory, RigidTransform2D]:
    """Re-express a trajectory in the coordinate frame of its first pose.

    Returns the canonical trajectory (frame 0 at the origin with identity
    heading, y untouched) and the rigid transform that maps canonical
    coordinates back to the input's world coordinates.
    """
    first = normalize_heading(traj.pose(0))
    world_from_canon = RigidTransform2D.from_pose(first)
    canon = world_from_canon.inverse().apply_frames(traj.frames)
    return RootTrajectory(canon, traj.frame_rate), world_from_canon


def canonicalize_body_frames(frames: np.ndarray) -> tuple[np.ndarray, RigidTransform2D]:
    """Canonicalize the absolute prefix of (N, 268) body frames.

    Only the abs block holds world coordinates; every other channel is
    root-relative already and passes through unchanged.
    """
    first = normalize_heading(RootPose.from_vector(frames[0, ABS_SLICE]))
    world_from_canon = RigidTransform2D.from_pose(first)
    out = np.array(frames, dtype=np.float64)
    out[:, ABS_SLICE] = world_from_canon.inverse().apply_frames(frames[:, ABS_SLICE])
    return out, world_from_canon


def encode_pose_vector(pose: BodyPose) -> np.ndarray:
    """Flatten a BodyPose to the fixed 268-wide layout.

    Layout: [abs(5) | ang_vel(1) | lin_vel_xz(2) | height(1) | joint_pos(63)
             | joint_vel(66) | joint_rot(126) | contacts(4)].
    """
    v = np.empty(BODY_WIDTH, dtype=np.float64)
    v[ABS_SLICE] = pose.abs.as_vector()
    v[ANG_VEL_INDEX] = pose.root_ang_vel
    v[LIN_VEL_SLICE] = (pose.root_lin_vel_x, pose.root_lin_vel_z)
    v[HEIGHT_INDEX] = pose.root_height
    v[JOINT_POS_SLICE] = pose.joint_pos.reshape(-1)
    v[JOINT_VEL_SLICE] = pose.joint_vel.reshape(-1)
    v[JOINT_ROT_SLICE] = pose.joint_rot.reshape(-1)
    v[CONTACT_SLICE] = pose.foot_contacts
    return v


def decode_pose_vector(v: np.ndarray) -> BodyPose:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (BODY_WIDTH,):
        raise ValidationError(f"pose vector must have {BODY_WIDTH} values, got {v.shape}")
    return BodyPose(
        abs=RootPose.from_vector(v[ABS_SLICE]),
        root_ang_vel=float(v[ANG_VEL_INDEX]),
        root_lin_vel_x=float(v[LIN_VEL_SLICE][0]),
        root_lin_vel_z=float(v[LIN_VEL_SLICE][1]),
        root_height=float(v[HEIGHT_INDEX]),
        joint_pos=v[JOINT_POS_SLICE].reshape(21, 3),
        joint_vel=v[JOINT_VEL_SLICE].reshape(22, 3),
        joint_rot=v[JOINT_ROT_SLICE].reshape(21, 6),
        foot_contacts=v[CONTACT_SLICE],
    )


def rotate_local_to_world(local: np.ndarray, cos_h, sin_h) -> np.ndarray:
    """Rotate (..., 3) offsets from the heading frame into world axes.

    With forward = (sin, cos) in (x, z):
        wx = c * lx + s * lz
        wy = ly
        wz = -s * lx + c * lz
    cos_h/sin_h broadcast against the leading axes of `local`.
    """
    c = np.asarray(cos_h, dtype=np.float64)[..., None]
    s = np.asarray(sin_h, dtype=np.float64)[..., None]
    lx, ly, lz = local[..., 0:1], local[..., 1:2], local[..., 2:3]
    wx = c * lx + s * lz
    wz = -s * lx + c * lz
    return np.concatenate([wx, ly, wz], axis=-1)


def rotate_world_to_local(world: np.ndarray, cos_h, sin_h) -> np.ndarray:
    return rotate_local_to_world(world, cos_h, np.negative(sin_h))


def joints_world(frames: np.ndarray) -> np.ndarray:
    """Decode world joint positions (N, 22, 3) from (N, 268) body frames.

    Joint 0 is the pelvis itself; joints 1..21 come from the root-relative
    block rotated by the heading and shifted by the pelvis position.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n = frames.shape[0]
    pelvis = frames[:, 0:3]
    cos_h, sin_h = frames[:, 3], frames[:, 4]
    local = frames[:, JOINT_POS_SLICE].reshape(n, 21, 3)
    world = rotate_local_to_world(local, cos_h[:, None], sin_h[:, None])
    out = np.empty((n, 22, 3), dtype=np.float64)
    out[:, 0] = pelvis
    out[:, 1:] = world + pelvis[:, None, :]
    return out


def joints_to_local(world_joints: np.ndarray, root_frames: np.ndarray) -> np.ndarray:
    """Inverse of joints_world for joints 1..21: world (N, 22, 3) -> (N, 21, 3)."""
    pelvis = root_frames[:, 0:3]
    rel = world_joints[:, 1:, :] - pelvis[:, None, :]
    return rotate_world_to_local(rel, root_frames[:, 3][:, None], root_frames[:, 4][:, None])


def heading_rot6d(cos_h: np.ndarray, sin_h: np.ndarray) -> np.ndarray:
    """First two columns of the heading rotation matrix, shape (..., 6)."""
    c = np.asarray(cos_h, dtype=np.float64)
    s = np.asarray(sin_h, dtype=np.float64)
    zeros = np.zeros_like(c)
    ones = np.ones_like(c)
    # columns of R_y: R @ ex = (c, 0, -s); R @ ey = (0, 1, 0)
    return np.stack([c, zeros, -s, zeros, ones, zeros], axis=-1)
