"""Deterministic kinematic walker: lifts a root trajectory to full-body frames.

Feet alternate support with a speed-proportional stride; the support foot is
pinned to its plant position for the entire stance, so ground-contact frames
do not slide. This is a stub for downstream metrics, not a learned lifter.
"""

from __future__ import annotations

import numpy as np

from ..core import (
    ABS_SLICE, ANG_VEL_INDEX, BODY_WIDTH, CONTACT_SLICE, HEIGHT_INDEX,
    JOINT_POS_SLICE, JOINT_ROT_SLICE, JOINT_VEL_SLICE, LIN_VEL_SLICE,
    BodyMotion, RootTrajectory, Skeleton, default_skeleton, heading_rot6d,
    joints_to_local, rotate_world_to_local, wrap_angle,
)

HIP_OFFSET = 0.10
ANKLE_HEIGHT = 0.08
TOE_HEIGHT = 0.02
TOE_FORWARD = 0.12
SWING_LIFT = 0.12
SWING_DEAD = 0.06  # swing fraction with no horizontal motion at either end
CONTACT_HEIGHT = 0.12
CONTACT_SPEED = 0.005  # m/frame

# indices into the 22-joint skeleton
J = {name: i for i, name in enumerate((
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist"))}


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def _swing_profile(u: float) -> float:
    """Horizontal swing progress: quintic ease with dead zones at both ends.

    The foot stays put while it is still low, so no frame can be both in
    ground contact (< 5 cm) and sliding (> 2.5 cm/frame).
    """
    x = (u - SWING_DEAD) / (1.0 - 2.0 * SWING_DEAD)
    x = min(max(x, 0.0), 1.0)
    return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


def _foot_plants(arc, xz_of_arc, right_of_arc, side: float, stride: float,
                 phase_offset: float):
    """Plant positions for one foot as a function of arc length."""
    total = arc[-1]
    n_cycles = int(np.floor(total / stride)) + 3
    ks = np.arange(-1, n_cycles)
    mid_arcs = np.clip((ks + 0.25 + phase_offset) * stride, 0.0, total)
    plants = xz_of_arc(mid_arcs) + side * HIP_OFFSET * right_of_arc(mid_arcs)
    return ks, plants


def _foot_track(arc_n, side: float, stride: float, phase_offset: float,
                xz_of_arc, right_of_arc, ankle_h: float):
    """World ankle positions plus stance flags over all frames for one foot."""
    n = len(arc_n)
    pos = np.empty((n, 3))
    stance = np.zeros(n, dtype=bool)
    ks, plants = _foot_plants(arc_n, xz_of_arc, right_of_arc, side, stride, phase_offset)

    phase = arc_n / stride - phase_offset
    cycle = np.floor(phase).astype(int)
    frac = phase - cycle
    for i in range(n):
        k = cycle[i]
        ki = k - int(ks[0])
        if frac[i] < 0.5:  # stance on plant k
            p = plants[np.clip(ki, 0, len(plants) - 1)]
            pos[i] = (p[0], ankle_h, p[1])
            stance[i] = True
        else:  # swing from plant k to plant k+1
            u = (frac[i] - 0.5) * 2.0
            a = plants[np.clip(ki, 0, len(plants) - 1)]
            b = plants[np.clip(ki + 1, 0, len(plants) - 1)]
            w = _swing_profile(u)
            x = (1 - w) * a[0] + w * b[0]
            z = (1 - w) * a[1] + w * b[1]
            lift = SWING_LIFT * np.sqrt(max(np.sin(np.pi * u), 0.0))
            pos[i] = (x, ankle_h + lift, z)
    return pos, stance


def build_world_joints(traj_frames: np.ndarray, style_label: str = "walk") -> np.ndarray:
    """World joint positions (N, 22, 3) tracking the given root frames."""
    frames = np.asarray(traj_frames, dtype=np.float64)
    n = frames.shape[0]
    pelvis = frames[:, 0:3].copy()
    c, s = frames[:, 3], frames[:, 4]
    fwd = np.stack([s, np.zeros(n), c], axis=1)
    right = np.stack([c, np.zeros(n), -s], axis=1)

    xz = frames[:, [0, 2]]
    seg = np.linalg.norm(np.diff(xz, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    mean_speed = total / max(n - 1, 1) * 20.0
    stride = float(np.clip(0.3 + 0.5 * mean_speed, 0.3, 1.4))
    ankle_h = ANKLE_HEIGHT + (0.06 if style_label == "tiptoe" else 0.0)

    def xz_of_arc(a):
        a = np.atleast_1d(a)
        return np.stack([np.interp(a, arc, xz[:, 0]), np.interp(a, arc, xz[:, 1])], axis=-1)

    def right_of_arc(a):
        a = np.atleast_1d(a)
        return np.stack([np.interp(a, arc, right[:, 0]), np.interp(a, arc, right[:, 2])], axis=-1)

    joints = np.zeros((n, 22, 3))
    joints[:, J["pelvis"]] = pelvis

    if total < 0.05:  # standing: both feet planted under the hips
        for side, hip, knee, ankle, toe in (
                (1.0, "left_hip", "left_knee", "left_ankle", "left_foot"),
                (-1.0, "right_hip", "right_knee", "right_ankle", "right_foot")):
            plant = pelvis[0, [0, 2]] + side * HIP_OFFSET * right[0, [0, 2]]
            ankle_pos = np.tile([plant[0], ankle_h, plant[1]], (n, 1))
            _fill_leg(joints, pelvis, right, fwd, side, hip, knee, ankle, toe, ankle_pos)
        l_stance = np.ones(n, dtype=bool)
        r_stance = np.ones(n, dtype=bool)
        phase = np.zeros(n)
    else:
        l_pos, l_stance = _foot_track(arc, 1.0, stride, 0.0, xz_of_arc, right_of_arc, ankle_h)
        r_pos, r_stance = _foot_track(arc, -1.0, stride, 0.5, xz_of_arc, right_of_arc, ankle_h)
        _fill_leg(joints, pelvis, right, fwd, 1.0, "left_hip", "left_knee",
                  "left_ankle", "left_foot", l_pos)
        _fill_leg(joints, pelvis, right, fwd, -1.0, "right_hip", "right_knee",
                  "right_ankle", "right_foot", r_pos)
        phase = arc / stride

    # torso column
    up = np.array([0.0, 1.0, 0.0])
    joints[:, J["spine1"]] = pelvis + up * 0.12
    joints[:, J["spine2"]] = pelvis + up * 0.26
    joints[:, J["spine3"]] = pelvis + up * 0.40
    joints[:, J["neck"]] = pelvis + up * 0.50
    joints[:, J["head"]] = pelvis + up * 0.62

    swing = np.sin(2.0 * np.pi * phase) * min(0.25, 0.18 * max(mean_speed, 0.1))
    for side, collar, shoulder, elbow, wrist, sgn in (
            (1.0, "left_collar", "left_shoulder", "left_elbow", "left_wrist", 1.0),
            (-1.0, "right_collar", "right_shoulder", "right_elbow", "right_wrist", -1.0)):
        joints[:, J[collar]] = joints[:, J["spine3"]] + side * 0.08 * right + up * 0.06
        joints[:, J[shoulder]] = joints[:, J["spine3"]] + side * 0.18 * right + up * 0.06
        arm_swing = (sgn * swing)[:, None] * fwd
        joints[:, J[elbow]] = joints[:, J[shoulder]] - up * 0.28 + 0.4 * arm_swing
        joints[:, J[wrist]] = joints[:, J[elbow]] - up * 0.26 + 0.6 * arm_swing
    return joints


def _fill_leg(joints, pelvis, right, fwd, side, hip, knee, ankle, toe, ankle_pos):
    n = pelvis.shape[0]
    up = np.array([0.0, 1.0, 0.0])
    hip_pos = pelvis + side * HIP_OFFSET * right - up * 0.06
    leg_len = 0.8
    d = np.linalg.norm(ankle_pos - hip_pos, axis=1)
    bend = 0.05 + 0.35 * np.clip(1.0 - d / leg_len, 0.0, 1.0)
    knee_pos = 0.5 * (hip_pos + ankle_pos) + bend[:, None] * fwd
    joints[:, J[hip]] = hip_pos
    joints[:, J[knee]] = knee_pos
    joints[:, J[ankle]] = ankle_pos
    # toe rides a fixed drop below the ankle so it lifts during swing
    drop = float(ankle_pos[:, 1].min()) - TOE_HEIGHT
    toe_pos = ankle_pos + TOE_FORWARD * fwd
    toe_pos[:, 1] = ankle_pos[:, 1] - drop
    joints[:, J[toe]] = toe_pos


def assemble_body_frames(root_frames: np.ndarray, world_joints: np.ndarray) -> np.ndarray:
    """Pack root frames plus world joints into the 268-channel layout."""
    frames = np.asarray(root_frames, dtype=np.float64)
    n = frames.shape[0]
    out = np.zeros((n, BODY_WIDTH))
    out[:, ABS_SLICE] = frames

    theta = np.arctan2(frames[:, 4], frames[:, 3])
    dtheta = np.zeros(n)
    dtheta[:-1] = np.array([wrap_angle(a) for a in np.diff(theta)])
    dtheta[-1] = dtheta[-2] if n > 1 else 0.0
    out[:, ANG_VEL_INDEX] = dtheta

    dxz = np.zeros((n, 3))
    dxz[:-1, 0] = np.diff(frames[:, 0])
    dxz[:-1, 2] = np.diff(frames[:, 2])
    dxz[-1] = dxz[-2] if n > 1 else 0.0
    local_v = rotate_world_to_local(dxz, frames[:, 3], frames[:, 4])
    out[:, LIN_VEL_SLICE] = local_v[:, [0, 2]]
    out[:, HEIGHT_INDEX] = frames[:, 1]

    out[:, JOINT_POS_SLICE] = joints_to_local(world_joints, frames).reshape(n, -1)

    jv_world = np.zeros_like(world_joints)
    jv_world[:-1] = np.diff(world_joints, axis=0)
    jv_world[-1] = jv_world[-2] if n > 1 else 0.0
    jv_local = rotate_world_to_local(jv_world, frames[:, 3][:, None], frames[:, 4][:, None])
    out[:, JOINT_VEL_SLICE] = jv_local.reshape(n, -1)

    rot6 = heading_rot6d(frames[:, 3], frames[:, 4])
    out[:, JOINT_ROT_SLICE] = np.tile(rot6[:, None, :], (1, 21, 1)).reshape(n, -1)

    feet = [J["left_ankle"], J["left_foot"], J["right_ankle"], J["right_foot"]]
    heights = world_joints[:, feet, 1]
    disp = np.zeros((n, 4))
    disp[:-1] = np.linalg.norm(np.diff(world_joints[:, feet][:, :, [0, 2]], axis=0), axis=2)
    disp[-1] = disp[-2] if n > 1 else 0.0
    out[:, CONTACT_SLICE] = ((heights < CONTACT_HEIGHT) & (disp < CONTACT_SPEED)).astype(float)
    return out


def lift_trajectory(traj: RootTrajectory, style_label: str = "walk",
                    skeleton: Skeleton | None = None) -> BodyMotion:
    """Lift a root trajectory to a BodyMotion whose pelvis tracks it exactly."""
    joints = build_world_joints(traj.frames, style_label)
    frames = assemble_body_frames(traj.frames, joints)
    return BodyMotion(frames, traj.frame_rate, skeleton or default_skeleton())


def reverse_motion(motion: BodyMotion) -> BodyMotion:
    """Time-reverse a motion, recomputing the velocity and contact channels."""
    from ..core import joints_world
    rev_frames = motion.frames[::-1]
    joints = joints_world(rev_frames)
    out = assemble_body_frames(rev_frames[:, ABS_SLICE], joints)
    # keep the pose-derived rotation channels from the source
    out[:, JOINT_ROT_SLICE] = rev_frames[:, JOINT_ROT_SLICE]
    return BodyMotion(out, motion.frame_rate, motion.skeleton)
