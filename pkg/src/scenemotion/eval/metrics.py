"""Geometric evaluation metrics: goal errors, collisions, foot skate,
penetration and diversity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import BodyMotion, RootPose, RootTrajectory, joints_world, wrap_angle
from ..errors import ValidationError
from ..geometry import DistanceField2D, ObjectVolume, query_field_many, query_volume_many
from ..sampler.guidance import proxy_points

FOOT_CONTACT_HEIGHT = 0.05  # meters
FOOT_SKATE_THRESHOLD = 0.025  # meters per frame
PENETRATION_RATIO_DEPTH = 0.03  # meters


def goal_errors(motion: RootTrajectory | BodyMotion | np.ndarray,
                goal: RootPose) -> tuple[float, float, float]:
    """(horizontal position m, orientation rad, height m) errors at the end."""
    frames = motion if isinstance(motion, np.ndarray) else motion.frames
    last = frames[-1]
    pos = float(np.hypot(last[0] - goal.x, last[2] - goal.z))
    theta = np.arctan2(last[4], last[3])
    orient = abs(wrap_angle(float(theta - goal.heading)))
    height = abs(float(last[1]) - goal.y)
    return pos, orient, height


def collision_ratio(motion: RootTrajectory | BodyMotion | np.ndarray,
                    field: DistanceField2D) -> float:
    """Fraction of frames whose pelvis projection leaves the walkable region."""
    frames = motion if isinstance(motion, np.ndarray) else motion.frames
    vals, _ = query_field_many(field, frames[:, [0, 2]])
    return float((vals > 0.0).mean())


def foot_skate_ratio(motion: BodyMotion) -> float:
    """Fraction of frames where a foot in ground contact (< 5 cm) slides
    more than 2.5 cm to the next frame."""
    joints = joints_world(motion.frames)
    feet = list(motion.skeleton.foot_joints)
    pos = joints[:, feet]  # (N, 2, 3)
    low = pos[:-1, :, 1] < FOOT_CONTACT_HEIGHT
    disp = np.linalg.norm(np.diff(pos[:, :, [0, 2]], axis=0), axis=2)
    skate = (low & (disp > FOOT_SKATE_THRESHOLD)).any(axis=1)
    return float(skate.mean())


def penetration(motion: BodyMotion, vol: ObjectVolume) -> tuple[float, float]:
    """(mean |sdf| over penetrating proxies, fraction of frames deeper than 3 cm).

    The paper-style value would be negative (a mean SDF); its magnitude is
    reported here.
    """
    joints = joints_world(motion.frames)
    pts = proxy_points(joints, motion.skeleton.joint_radii)
    n = pts.shape[0]
    flat = pts.reshape(-1, 3)
    vals, _ = query_volume_many(vol, flat)
    vals = vals.reshape(n, -1)
    pen = vals < 0.0
    value = float(np.abs(vals[pen]).mean()) if pen.any() else 0.0
    deep = (vals < -PENETRATION_RATIO_DEPTH).any(axis=1)
    return value, float(deep.mean())


def diversity(motions: list, sample_pairs: int = 32, seed: int = 0) -> float:
    """Mean pairwise L2 distance between flattened motions.

    All unordered pairs are used when there are at most `sample_pairs` of
    them; otherwise pairs are sampled without replacement (seeded).
    """
    if len(motions) < 2:
        raise ValidationError("diversity needs at least 2 motions")
    flats = []
    for m in motions:
        frames = m if isinstance(m, np.ndarray) else m.frames
        flats.append(np.asarray(frames, dtype=np.float64).reshape(-1))
    if len({f.shape for f in flats}) != 1:
        raise ValidationError("diversity needs equal-length motions")
    k = len(flats)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    if len(pairs) > sample_pairs:
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(pairs), size=sample_pairs, replace=False)
        pairs = [pairs[i] for i in idx]
    dists = [float(np.linalg.norm(flats[i] - flats[j])) for i, j in pairs]
    return float(np.mean(dists))


@dataclass
class MetricReport:
    """Aggregate metrics over a batch of cases, with per-case breakdown."""

    goal_pos_err: float = 0.0
    goal_orient_err: float = 0.0
    goal_height_err: float = 0.0
    collision_ratio: float = 0.0
    foot_skate_ratio: float = 0.0
    penetration_value: float = 0.0
    penetration_ratio: float = 0.0
    diversity: float = 0.0
    count: int = 0
    cases: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("collision_ratio", "foot_skate_ratio", "penetration_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0, 1]")
        for name in ("goal_pos_err", "goal_orient_err", "goal_height_err",
                     "penetration_value"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"{name} must be >= 0")

    def to_json(self) -> dict:
        return {
            "goal_pos_err": self.goal_pos_err,
            "goal_orient_err": self.goal_orient_err,
            "goal_height_err": self.goal_height_err,
            "collision_ratio": self.collision_ratio,
            "foot_skate_ratio": self.foot_skate_ratio,
            "penetration_value": self.penetration_value,
            "penetration_ratio": self.penetration_ratio,
            "diversity": self.diversity,
            "count": self.count,
            "cases": self.cases,
            "notes": self.notes,
        }


def aggregate_report(cases: list[dict], notes: dict | None = None) -> MetricReport:
    """Average per-case metric dicts into one report (missing keys skipped)."""
    if not cases:
        return MetricReport(notes=notes or {})

    def mean_of(key):
        vals = [c[key] for c in cases if key in c]
        return float(np.mean(vals)) if vals else 0.0

    return MetricReport(
        goal_pos_err=mean_of("goal_pos_err"),
        goal_orient_err=mean_of("goal_orient_err"),
        goal_height_err=mean_of("goal_height_err"),
        collision_ratio=mean_of("collision_ratio"),
        foot_skate_ratio=mean_of("foot_skate_ratio"),
        penetration_value=mean_of("penetration_value"),
        penetration_ratio=mean_of("penetration_ratio"),
        diversity=mean_of("diversity"),
        count=len(cases),
        cases=cases,
        notes=notes or {"fid": "not computed (needs a learned evaluator)",
                        "r_precision": "not computed (needs a learned evaluator)"},
    )
