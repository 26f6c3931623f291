"""Domain types and coordinate conventions.

Conventions used everywhere in this package:

* y is the vertical axis; the floor plane is (x, z).
* A heading angle theta is stored as the pair (cos_h, sin_h), and the
  character's forward direction in the floor plane is (sin theta, cos theta),
  so theta = 0 faces +z.
* Root trajectories are expressed in the coordinate frame of their first
  pose once canonicalized: frame 0 sits at x = z = 0 with cos_h = 1,
  sin_h = 0 (y is left alone).
* All motion containers are immutable after construction; their numpy
  buffers are marked read-only so they can be shared across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError

# Flattened body pose layout (268 channels per frame):
# [abs(5) | root_ang_vel(1) | root_lin_vel_xz(2) | root_height(1)
#  | joint_pos 21x3 (63) | joint_vel 22x3 (66) | joint_rot 21x6 (126)
#  | foot_contacts(4)]
ROOT_WIDTH = 5
BODY_WIDTH = 268
ABS_SLICE = slice(0, 5)
ANG_VEL_INDEX = 5
LIN_VEL_SLICE = slice(6, 8)
HEIGHT_INDEX = 8
JOINT_POS_SLICE = slice(9, 72)
JOINT_VEL_SLICE = slice(72, 138)
JOINT_ROT_SLICE = slice(138, 264)
CONTACT_SLICE = slice(264, 268)

NUM_JOINTS = 22


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{what} contains non-finite values")


def heading_angle(cos_h: float, sin_h: float) -> float:
    return math.atan2(sin_h, cos_h)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class RootPose:
    """Pelvis position plus heading: (x, y, z, cos_h, sin_h)."""

    x: float
    y: float
    z: float
    cos_h: float = 1.0
    sin_h: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.cos_h, self.sin_h)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite root pose {vals}")

    @property
    def heading(self) -> float:
        return heading_angle(self.cos_h, self.sin_h)

    @property
    def xz(self) -> tuple[float, float]:
        return (self.x, self.z)

    def as_vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.cos_h, self.sin_h], dtype=np.float64)

    @staticmethod
    def from_vector(v: Sequence[float]) -> "RootPose":
        if len(v) != ROOT_WIDTH:
            raise ValidationError(f"root pose vector must have 5 values, got {len(v)}")
        return RootPose(float(v[0]), float(v[1]), float(v[2]), float(v[3]), float(v[4]))


@dataclass(frozen=True)
class RigidTransform2D:
    """Rigid motion of the floor plane: rotate about vertical, then translate.

    Maps canonical coordinates to world coordinates:
        wx = cos_r * cx + sin_r * cz + tx
        wz = -sin_r * cx + cos_r * cz + tz
    headings compose additively, y passes through.
    """

    tx: float = 0.0
    tz: float = 0.0
    cos_r: float = 1.0
    sin_r: float = 0.0

    @staticmethod
    def identity() -> "RigidTransform2D":
        return RigidTransform2D()

    @staticmethod
    def from_pose(pose: RootPose) -> "RigidTransform2D":
        return RigidTransform2D(pose.x, pose.z, pose.cos_h, pose.sin_h)

    def inverse(self) -> "RigidTransform2D":
        # R^-1 applied to -t
        ix = -(self.cos_r * self.tx - self.sin_r * self.tz)
        iz = -(self.sin_r * self.tx + self.cos_r * self.tz)
        return RigidTransform2D(ix, iz, self.cos_r, -self.sin_r)

    def apply_xz(self, xz: np.ndarray) -> np.ndarray:
        xz = np.asarray(xz, dtype=np.float64)
        x = self.cos_r * xz[..., 0] + self.sin_r * xz[..., 1] + self.tx
        z = -self.sin_r * xz[..., 0] + self.cos_r * xz[..., 1] + self.tz
        return np.stack([x, z], axis=-1)

    def apply_heading(self, cos_h: np.ndarray, sin_h: np.ndarray):
        # angle addition: heading' = heading + rot
        c = cos_h * self.cos_r - sin_h * self.sin_r
        s = sin_h * self.cos_r + cos_h * self.sin_r
        return c, s

    def apply_frames(self, frames: np.ndarray) -> np.ndarray:
        """Transform (N, 5) root frames [x, y, z, cos, sin]."""
        frames = np.asarray(frames, dtype=np.float64)
        out = frames.copy()
        xz = self.apply_xz(frames[:, [0, 2]])
        out[:, 0] = xz[:, 0]
        out[:, 2] = xz[:, 1]
        out[:, 3], out[:, 4] = self.apply_heading(frames[:, 3], frames[:, 4])
        return out

    def apply_pose(self, pose: RootPose) -> RootPose:
        v = self.apply_frames(pose.as_vector()[None, :])[0]
        return RootPose.from_vector(v)


class RootTrajectory:
    """Pelvis trajectory of N >= 2 frames, shape (N, 5)."""

    __slots__ = ("frames", "frame_rate")

    def __init__(self, frames: np.ndarray, frame_rate: float = 20.0):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != ROOT_WIDTH:
            raise ValidationError(f"trajectory frames must be (N, 5), got {frames.shape}")
        if frames.shape[0] < 2:
            raise ValidationError("trajectory needs at least 2 frames")
        if frame_rate <= 0:
            raise ValidationError("frame_rate must be positive")
        _require_finite(frames, "trajectory")
        self.frames = _freeze(frames)
        self.frame_rate = float(frame_rate)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def xz(self) -> np.ndarray:
        return self.frames[:, [0, 2]]

    def pose(self, i: int) -> RootPose:
        return RootPose.from_vector(self.frames[i])

    def transformed(self, t: RigidTransform2D) -> "RootTrajectory":
        return RootTrajectory(t.apply_frames(self.frames), self.frame_rate)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RootTrajectory)
            and self.frame_rate == other.frame_rate
            and np.array_equal(self.frames, other.frames)
        )


@dataclass(frozen=True)
class Skeleton:
    """22-joint tree with rest offsets, mirror pairs and per-joint proxy radii.

    Joint 0 is the pelvis. The ordering is fixed by this package (documented
    below) and versioned through the motion file format.
    """

    names: tuple[str, ...]
    parents: tuple[int, ...]
    offsets: np.ndarray  # (22, 3) rest offsets from parent, meters
    foot_joints: tuple[int, int]  # (left foot, right foot)
    mirror_pairs: tuple[tuple[int, int], ...]
    joint_radii: np.ndarray  # (22,) proxy sphere radius, meters

    def __post_init__(self):
        if len(self.names) != NUM_JOINTS or len(self.parents) != NUM_JOINTS:
            raise ValidationError("skeleton must have exactly 22 joints")
        if self.parents[0] != -1:
            raise ValidationError("joint 0 must be the pelvis root")
        object.__setattr__(self, "offsets", _freeze(self.offsets))
        radii = np.ascontiguousarray(self.joint_radii, dtype=np.float64)
        radii.flags.writeable = False
        object.__setattr__(self, "joint_radii", radii)


_JOINT_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
)

_JOINT_PARENTS = (
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19,
)

_MIRROR_PAIRS = ((1, 2), (4, 5), (7, 8), (10, 11), (13, 14), (16, 17), (18, 19), (20, 21))

# Rest offsets for a ~1.7 m figure standing on flat ground, pelvis at 0.9 m.
_REST_OFFSETS = np.array([
    [0.00, 0.90, 0.00],    # pelvis (offset from ground origin)
    [0.10, -0.06, 0.00],   # left_hip
    [-0.10, -0.06, 0.00],  # right_hip
    [0.00, 0.12, 0.00],    # spine1
    [0.00, -0.40, 0.00],   # left_knee
    [0.00, -0.40, 0.00],   # right_knee
    [0.00, 0.14, 0.00],    # spine2
    [0.00, -0.40, 0.00],   # left_ankle
    [0.00, -0.40, 0.00],   # right_ankle
    [0.00, 0.14, 0.00],    # spine3
    [0.00, -0.04, 0.12],   # left_foot (toe)
    [0.00, -0.04, 0.12],   # right_foot
    [0.00, 0.10, 0.00],    # neck
    [0.08, 0.06, 0.00],    # left_collar
    [-0.08, 0.06, 0.00],   # right_collar
    [0.00, 0.12, 0.00],    # head
    [0.10, 0.00, 0.00],    # left_shoulder
    [-0.10, 0.00, 0.00],   # right_shoulder
    [0.02, -0.28, 0.00],   # left_elbow
    [-0.02, -0.28, 0.00],  # right_elbow
    [0.00, -0.26, 0.00],   # left_wrist
    [0.00, -0.26, 0.00],   # right_wrist
], dtype=np.float64)

# Proxy sphere radii per joint group: pelvis/hips 0.12, spine 0.10,
# limbs 0.05, feet/hands 0.04.
_JOINT_RADII = np.array([
    0.12, 0.12, 0.12, 0.10, 0.05, 0.05, 0.10, 0.05, 0.05, 0.10, 0.04, 0.04,
    0.10, 0.05, 0.05, 0.10, 0.05, 0.05, 0.05, 0.05, 0.04, 0.04,
], dtype=np.float64)


def default_skeleton() -> Skeleton:
    return Skeleton(
        names=_JOINT_NAMES,
        parents=_JOINT_PARENTS,
        offsets=_REST_OFFSETS.copy(),
        foot_joints=(10, 11),
        mirror_pairs=_MIRROR_PAIRS,
        joint_radii=_JOINT_RADII.copy(),
    )


@dataclass(frozen=True)
class BodyPose:
    """One full-body frame; flattens to exactly 268 channels."""

    abs: RootPose
    root_ang_vel: float  # rad/frame
    root_lin_vel_x: float  # m/frame, heading frame
    root_lin_vel_z: float
    root_height: float  # meters
    joint_pos: np.ndarray  # (21, 3) root-relative, meters
    joint_rot: np.ndarray  # (21, 6) continuous rotation
    joint_vel: np.ndarray  # (22, 3) m/frame
    foot_contacts: np.ndarray  # (4,) in [0, 1]

    def __post_init__(self):
        jp = np.asarray(self.joint_pos, dtype=np.float64)
        jr = np.asarray(self.joint_rot, dtype=np.float64)
        jv = np.asarray(self.joint_vel, dtype=np.float64)
        cf = np.clip(np.asarray(self.foot_contacts, dtype=np.float64), 0.0, 1.0)
        if jp.shape != (21, 3) or jr.shape != (21, 6) or jv.shape != (22, 3) or cf.shape != (4,):
            raise ValidationError("bad body pose block shapes")
        for name, a in (("joint_pos", jp), ("joint_rot", jr), ("joint_vel", jv)):
            _require_finite(a, name)
        object.__setattr__(self, "joint_pos", _freeze(jp))
        object.__setattr__(self, "joint_rot", _freeze(jr))
        object.__setattr__(self, "joint_vel", _freeze(jv))
        object.__setattr__(self, "foot_contacts", _freeze(cf))


class BodyMotion:
    """Full-body motion: (N, 268) frames plus the skeleton that decodes them."""

    __slots__ = ("frames", "frame_rate", "skeleton")

    def __init__(self, frames: np.ndarray, frame_rate: float = 20.0,
                 skeleton: Skeleton | None = None):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != BODY_WIDTH:
            raise ValidationError(f"body frames must be (N, 268), got {frames.shape}")
        if frames.shape[0] < 2:
            raise ValidationError("motion needs at least 2 frames")
        _require_finite(frames, "body motion")
        self.frames = _freeze(frames)
        self.frame_rate = float(frame_rate)
        self.skeleton = skeleton if skeleton is not None else default_skeleton()

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def root_frames(self) -> np.ndarray:
        return self.frames[:, ABS_SLICE]

    def root_trajectory(self) -> RootTrajectory:
        return RootTrajectory(self.frames[:, ABS_SLICE], self.frame_rate)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BodyMotion)
            and self.frame_rate == other.frame_rate
            and np.array_equal(self.frames, other.frames)
        )


UNCONDITIONED = "unconditioned"

DEFAULT_STYLES = (
    UNCONDITIONED, "walk", "walk-fast", "tiptoe",
    "sit-down", "stand-up", "walk-then-sit", "stand-then-walk",
)


@dataclass(frozen=True)
class StyleVocabulary:
    """Fixed label vocabulary standing in for free-text conditioning."""

    labels: tuple[str, ...] = DEFAULT_STYLES
    embedding_dim: int = 16

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("style labels must be unique")
        if UNCONDITIONED not in self.labels:
            raise ValidationError(f"vocabulary must reserve the '{UNCONDITIONED}' token")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown style label {label!r}") from None

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class GoalSpec:
    """Endpoint conditioning for one generation request."""

    start: RootPose | BodyPose
    goal: RootPose
    style_label: str
    horizon: int = 100
    vocabulary: StyleVocabulary = field(default_factory=StyleVocabulary)

    def __post_init__(self):
        self.vocabulary.index(self.style_label)  # raises on unknown label
        if self.horizon < 2:
            raise ValidationError("horizon must be >= 2")

    @property
    def style_index(self) -> int:
        return self.vocabulary.index(self.style_label)
