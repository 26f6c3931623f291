"""Kinematic sit / stand interaction clips around chair objects."""

from __future__ import annotations

import numpy as np

from ..core import BodyMotion, RootPose, RootTrajectory, default_skeleton
from ..errors import ValidationError
from ..geometry import SceneObject
from .walker import J, assemble_body_frames, build_world_joints, reverse_motion

INTERACTION_STYLES = ("sit-down", "stand-up", "walk-then-sit", "stand-then-walk")

SEAT_CLEARANCE = 0.02  # pelvis rides this far above the seat surface
APPROACH_STANDOFF = 0.45
STAND_HEIGHT = 0.90


def seat_pelvis_pose(chair: SceneObject) -> RootPose:
    """Seated goal pelvis: centered over the seat, facing the chair front."""
    fx, fz = chair.forward
    return RootPose(chair.position[0], chair.seat_top + SEAT_CLEARANCE,
                    chair.position[2], np.cos(chair.yaw), np.sin(chair.yaw))


def approach_pose(chair: SceneObject, standoff: float = APPROACH_STANDOFF) -> RootPose:
    """Standing pose in front of the seat, facing the chair."""
    fx, fz = chair.forward
    x = chair.position[0] + standoff * fx
    z = chair.position[2] + standoff * fz
    # heading faces the chair center: forward = -chair.forward
    theta = np.arctan2(-fx, -fz)
    return RootPose(x, STAND_HEIGHT, z, np.cos(theta), np.sin(theta))


def _ease(u: np.ndarray) -> np.ndarray:
    return u * u * (3.0 - 2.0 * u)


def _sit_down_frames(chair: SceneObject, start: RootPose, n: int,
                     frame_rate: float) -> np.ndarray:
    """Root frames for approach -> turn -> descend onto the seat."""
    pre = approach_pose(chair)
    seat = seat_pelvis_pose(chair)

    d_approach = float(np.hypot(pre.x - start.x, pre.z - start.z))
    n_sit = max(int(0.3 * n), 8)
    n_turn = max(int(0.15 * n), 6)
    n_walk = n - n_sit - n_turn
    if n_walk < 2:
        raise ValidationError("horizon too short for a sit clip")

    frames = np.zeros((n, 5))
    # walk phase: straight approach with eased speed
    u = _ease(np.linspace(0.0, 1.0, n_walk))
    frames[:n_walk, 0] = start.x + u * (pre.x - start.x)
    frames[:n_walk, 2] = start.z + u * (pre.z - start.z)
    frames[:n_walk, 1] = STAND_HEIGHT
    if d_approach > 1e-6:
        theta_walk = np.arctan2(pre.x - start.x, pre.z - start.z)
    else:
        theta_walk = start.heading
    frames[:n_walk, 3] = np.cos(theta_walk)
    frames[:n_walk, 4] = np.sin(theta_walk)

    # turn phase: rotate in place to face out of the chair
    theta_out = chair.yaw
    u = _ease(np.linspace(0.0, 1.0, n_turn))
    dtheta = np.arctan2(np.sin(theta_out - theta_walk), np.cos(theta_out - theta_walk))
    thetas = theta_walk + u * dtheta
    sl = slice(n_walk, n_walk + n_turn)
    frames[sl, 0] = pre.x
    frames[sl, 2] = pre.z
    frames[sl, 1] = STAND_HEIGHT
    frames[sl, 3] = np.cos(thetas)
    frames[sl, 4] = np.sin(thetas)

    # sit phase: translate over the seat while the pelvis descends
    u = _ease(np.linspace(0.0, 1.0, n_sit))
    sl = slice(n_walk + n_turn, n)
    frames[sl, 0] = pre.x + u * (seat.x - pre.x)
    frames[sl, 2] = pre.z + u * (seat.z - pre.z)
    frames[sl, 1] = STAND_HEIGHT + u * (seat.y - STAND_HEIGHT)
    frames[sl, 3] = np.cos(theta_out)
    frames[sl, 4] = np.sin(theta_out)
    return frames


def _seated_leg_targets(chair: SceneObject, n_frames: int):
    """Fixed foot plants in front of the seat for the sit phase."""
    fx, fz = chair.forward
    sx, sz = chair.position[0], chair.position[2]
    plants = {}
    right = np.array([fz, -fx])  # right of the outward heading
    for side, name in ((1.0, "left"), (-1.0, "right")):
        p = np.array([sx, sz]) + 0.38 * np.array([fx, fz]) + side * 0.11 * right
        plants[name] = p
    return plants


def generate_interaction(seed: int, chair: SceneObject, style_label: str,
                         start: RootPose | None = None, n: int = 120,
                         frame_rate: float = 20.0) -> BodyMotion:
    """Kinematically plausible sit/stand clip for one chair.

    sit-down starts near the seat; walk-then-sit adds a longer approach;
    stand-up and stand-then-walk are exact time reversals.
    """
    if style_label not in INTERACTION_STYLES:
        raise ValidationError(f"unsupported interaction style {style_label!r}")
    if chair.kind != "chair":
        raise ValidationError("interaction target must be a chair object")
    rng = np.random.default_rng(seed)
    reverse = style_label in ("stand-up", "stand-then-walk")
    long_walk = style_label in ("walk-then-sit", "stand-then-walk")

    if start is None:
        fx, fz = chair.forward
        dist = rng.uniform(1.2, 1.9) if long_walk else rng.uniform(0.5, 0.8)
        ang = rng.uniform(-0.5, 0.5)
        ca, sa = np.cos(ang), np.sin(ang)
        dx = ca * fx + sa * fz
        dz = -sa * fx + ca * fz
        sx = chair.position[0] + dist * dx
        sz = chair.position[2] + dist * dz
        theta = np.arctan2(chair.position[0] - sx, chair.position[2] - sz)
        start = RootPose(sx, STAND_HEIGHT, sz, np.cos(theta), np.sin(theta))

    root = _sit_down_frames(chair, start, n, frame_rate)
    n_sit = max(int(0.3 * n), 8)

    # walking-section joints from the walker, seated-section joints custom
    walk_part = RootTrajectory(root[: n - n_sit + 1], frame_rate)
    joints = np.zeros((n, 22, 3))
    joints[: n - n_sit + 1] = build_world_joints(walk_part.frames)

    plants = _seated_leg_targets(chair, n_sit)
    fwd = np.array([chair.forward[0], 0.0, chair.forward[1]])
    right3 = np.array([fwd[2], 0.0, -fwd[0]])
    up = np.array([0.0, 1.0, 0.0])
    for k in range(n - n_sit, n):
        pelvis = root[k, 0:3]
        joints[k, J["pelvis"]] = pelvis
        for side, name in ((1.0, "left"), (-1.0, "right")):
            hip = pelvis + side * 0.10 * right3 - up * 0.06
            ankle = np.array([plants[name][0], 0.08, plants[name][1]])
            toe = ankle + 0.12 * fwd
            toe[1] = 0.02
            d = np.linalg.norm(ankle - hip)
            bend = 0.05 + 0.35 * np.clip(1.0 - d / 0.8, 0.0, 1.0)
            knee = 0.5 * (hip + ankle) + bend * fwd
            pre = "left_" if name == "left" else "right_"
            joints[k, J[pre + "hip"]] = hip
            joints[k, J[pre + "knee"]] = knee
            joints[k, J[pre + "ankle"]] = ankle
            joints[k, J[pre + "foot"]] = toe
        lean = 0.06 * np.sin(np.pi * (k - (n - n_sit)) / max(n_sit - 1, 1))
        joints[k, J["spine1"]] = pelvis + up * 0.12 + lean * fwd
        joints[k, J["spine2"]] = pelvis + up * 0.26 + 1.5 * lean * fwd
        joints[k, J["spine3"]] = pelvis + up * 0.40 + 2.0 * lean * fwd
        joints[k, J["neck"]] = pelvis + up * 0.50 + 2.0 * lean * fwd
        joints[k, J["head"]] = pelvis + up * 0.62 + 2.0 * lean * fwd
        for side, pre in ((1.0, "left_"), (-1.0, "right_")):
            joints[k, J[pre + "collar"]] = joints[k, J["spine3"]] + side * 0.08 * right3 + up * 0.06
            joints[k, J[pre + "shoulder"]] = joints[k, J["spine3"]] + side * 0.18 * right3 + up * 0.06
            joints[k, J[pre + "elbow"]] = joints[k, J[pre + "shoulder"]] - up * 0.28 + 0.05 * fwd
            joints[k, J[pre + "wrist"]] = joints[k, J[pre + "elbow"]] - up * 0.22 + 0.12 * fwd

    frames = assemble_body_frames(root, joints)
    motion = BodyMotion(frames, frame_rate, default_skeleton())
    if reverse:
        motion = reverse_motion(motion)
    return motion
