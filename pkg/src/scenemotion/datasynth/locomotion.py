"""Synthetic locomotion trajectories with style-dependent speed and height."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from ..core import RootTrajectory, canonicalize_trajectory
from ..errors import ValidationError

# style -> (speed range m/s, pelvis height m)
STYLE_PARAMS = {
    "walk": ((1.0, 1.4), 0.90),
    "walk-fast": ((1.6, 2.2), 0.92),
    "tiptoe": ((0.4, 0.8), 0.97),
}


def generate_locomotion(seed: int, style_label: str = "walk", n: int = 100,
                        frame_rate: float = 20.0) -> RootTrajectory:
    """Smooth canonical trajectory: random waypoints + cubic smoothing.

    The heading follows the path tangent; per-style speed ranges are
    documented in STYLE_PARAMS. Deterministic per (seed, style).
    """
    if style_label not in STYLE_PARAMS:
        raise ValidationError(f"no locomotion parameters for style {style_label!r}")
    (lo, hi), base_height = STYLE_PARAMS[style_label]
    rng = np.random.default_rng(seed)
    speed = float(rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)))
    duration = (n - 1) / frame_rate
    length = speed * duration

    # waypoints along a gently turning direction, starting at the origin
    # facing +z (the canonical forward)
    k = int(rng.integers(4, 7))
    turns = rng.normal(0.0, 0.35, size=k)
    turns[0] = 0.0
    heading = np.cumsum(turns)
    seg = length / k
    steps = np.stack([np.sin(heading), np.cos(heading)], axis=1) * seg
    waypoints = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])

    # smooth through the waypoints and resample at uniform arc length
    spline = CubicSpline(np.arange(k + 1), waypoints, axis=0)
    dense_t = np.linspace(0.0, k, 40 * k)
    dense = spline(dense_t)
    seglen = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seglen)])
    targets = np.linspace(0.0, arc[-1], n)
    xz = np.stack([np.interp(targets, arc, dense[:, 0]),
                   np.interp(targets, arc, dense[:, 1])], axis=1)

    vel = np.gradient(xz, axis=0)
    theta = np.arctan2(vel[:, 0], vel[:, 1])  # forward = (sin, cos)
    y = base_height + 0.01 * np.sin(np.linspace(0.0, 2.0 * np.pi * duration, n))

    frames = np.stack([xz[:, 0], y, xz[:, 1], np.cos(theta), np.sin(theta)], axis=1)
    canon, _ = canonicalize_trajectory(RootTrajectory(frames, frame_rate))
    return canon
