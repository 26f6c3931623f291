"""User-path blending: fuse a drawn or planned 2D route into the prediction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class BlendSpec:
    """2D route (N, 2) in meters plus the blending scale s in [0, 1].

    s = 0 follows the route exactly, s = 1 ignores it.
    """

    path: np.ndarray
    scale: float

    def __post_init__(self):
        p = np.ascontiguousarray(self.path, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValidationError(f"blend path must be (N, 2), got {p.shape}")
        if not 0.0 <= self.scale <= 1.0:
            raise ValidationError(f"blend scale {self.scale} outside [0, 1]")
        p.flags.writeable = False
        object.__setattr__(self, "path", p)


def blend(x0_hat: np.ndarray, spec: BlendSpec) -> np.ndarray:
    """Overwrite interior-frame (x, z) with s * prediction + (1 - s) * path.

    Endpoint frames stay mask-dominated and are left untouched; y and the
    heading channels pass through unchanged.
    """
    n = x0_hat.shape[0]
    if spec.path.shape[0] != n:
        raise ValidationError(f"blend path has {spec.path.shape[0]} points, motion has {n}")
    out = np.array(x0_hat, copy=True)
    s = spec.scale
    sl = slice(1, n - 1)
    out[sl, 0] = s * x0_hat[sl, 0] + (1.0 - s) * spec.path[sl, 0]
    out[sl, 2] = s * x0_hat[sl, 2] + (1.0 - s) * spec.path[sl, 1]
    return out
