"""Pluggable root-to-body lifting interface and the kinematic stub."""

from __future__ import annotations

from typing import Protocol

import numpy as np

from ..core import BodyMotion, RootTrajectory, Skeleton
from ..datasynth.walker import lift_trajectory
from ..errors import ValidationError

PELVIS_TOLERANCE = 0.01  # meters


class LiftingBackend(Protocol):
    """Anything that turns a dense root trajectory into a full-body motion.

    Implementations must keep the per-frame pelvis within 1 cm of the input
    trajectory.
    """

    tag: str

    def lift(self, traj: RootTrajectory, style_label: str) -> BodyMotion: ...


class KinematicLifter:
    """Deterministic kinematic walker stub.

    Stands in for a learned in-painting lifter so downstream metrics (foot
    skating in particular) stay computable; swap via the LiftingBackend
    protocol.
    """

    tag = "kinematic-stub"

    def __init__(self, skeleton: Skeleton | None = None):
        self.skeleton = skeleton

    def lift(self, traj: RootTrajectory, style_label: str = "walk") -> BodyMotion:
        body = lift_trajectory(traj, style_label, self.skeleton)
        check_lift_contract(traj, body)
        return body


def check_lift_contract(traj: RootTrajectory, body: BodyMotion) -> None:
    pelvis = body.frames[:, 0:3]
    err = np.linalg.norm(pelvis - traj.frames[:, 0:3], axis=1).max()
    if err > PELVIS_TOLERANCE:
        raise ValidationError(f"lifted pelvis drifts {err:.4f} m from the trajectory")
