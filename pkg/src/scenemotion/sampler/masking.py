"""Goal in-painting masks and input assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ABS_SLICE
from ..errors import ValidationError


@dataclass(frozen=True)
class FrameMask:
    """Binary per-frame, per-channel mask; 1 marks clean known values."""

    m: np.ndarray  # (N, D) bool

    def __post_init__(self):
        a = np.ascontiguousarray(self.m, dtype=bool)
        if a.ndim != 2:
            raise ValidationError("mask must be (N, D)")
        a.flags.writeable = False
        object.__setattr__(self, "m", a)

    @property
    def shape(self):
        return self.m.shape


def goal_mask(n_frames: int, width: int) -> FrameMask:
    """Default goal-conditioning mask: first and last frames fully known."""
    m = np.zeros((n_frames, width), dtype=bool)
    m[0, :] = True
    m[-1, :] = True
    return FrameMask(m)


def start_only_mask(n_frames: int, width: int) -> FrameMask:
    m = np.zeros((n_frames, width), dtype=bool)
    m[0, :] = True
    return FrameMask(m)


def interaction_goal_mask(n_frames: int, width: int) -> FrameMask:
    """Full start pose known; only the absolute pelvis block at the goal."""
    m = np.zeros((n_frames, width), dtype=bool)
    m[0, :] = True
    m[-1, ABS_SLICE] = True
    return FrameMask(m)


def mask_inputs(x_t: np.ndarray, x0_known: np.ndarray, mask: FrameMask) -> np.ndarray:
    """Overwrite masked frames with clean values, then append the mask channels.

    x_t, x0_known: (..., N, D). Returns (..., N, 2D) with the motion block
    first and the mask (as 0/1 floats) second.
    """
    m = mask.m
    if x_t.shape[-2:] != m.shape or x0_known.shape[-2:] != m.shape:
        raise ValidationError(
            f"shape mismatch: x_t {x_t.shape}, known {x0_known.shape}, mask {m.shape}")
    mf = m.astype(x_t.dtype)
    overwritten = mf * x0_known + (1.0 - mf) * x_t
    tiled = np.broadcast_to(mf, overwritten.shape)
    return np.concatenate([overwritten, tiled], axis=-1)


def pin_masked(frames: np.ndarray, x0_known: np.ndarray, mask: FrameMask) -> np.ndarray:
    """Copy the known values into the masked channels of an output."""
    out = np.array(frames, copy=True)
    out[mask.m] = np.broadcast_to(x0_known, out.shape)[mask.m]
    return out
