"""Basis point set features for object geometry and human-object relation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .volume import ObjectVolume, query_volume_many

BPS_COUNT = 1024
BPS_RADIUS = 1.0
BPS_SEED = 7  # one fixed seed per engine instance keeps features comparable


@dataclass(frozen=True)
class BPSBasis:
    """Fixed random points inside a sphere around an object center."""

    points: np.ndarray  # (count, 3) meters, world frame
    center: tuple[float, float, float]
    radius: float = BPS_RADIUS

    def __post_init__(self):
        p = np.ascontiguousarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValidationError(f"basis points must be (K, 3), got {p.shape}")
        r = np.linalg.norm(p - np.asarray(self.center, dtype=np.float64), axis=1)
        if np.any(r > self.radius + 1e-9):
            raise ValidationError("basis point outside the sphere")
        p.flags.writeable = False
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))


def unit_ball_offsets(count: int = BPS_COUNT, seed: int = BPS_SEED) -> np.ndarray:
    """Rejection-sample `count` points in the unit ball, deterministic per seed."""
    rng = np.random.default_rng(seed)
    out = np.empty((count, 3), dtype=np.float64)
    have = 0
    while have < count:
        cand = rng.uniform(-1.0, 1.0, size=(2 * (count - have) + 16, 3))
        keep = cand[np.einsum("ij,ij->i", cand, cand) <= 1.0]
        take = min(len(keep), count - have)
        out[have:have + take] = keep[:take]
        have += take
    return out


def make_basis(center, count: int = BPS_COUNT, radius: float = BPS_RADIUS,
               seed: int = BPS_SEED) -> BPSBasis:
    pts = np.asarray(center, dtype=np.float64) + radius * unit_ball_offsets(count, seed)
    return BPSBasis(pts, tuple(float(v) for v in np.asarray(center, dtype=np.float64)))


def compute_object_bps(vol: ObjectVolume, basis: BPSBasis) -> np.ndarray:
    """Unsigned basis-to-surface distances, (K,) meters.

    Interior basis points get positive values too (distance to the surface,
    not a signed quantity).
    """
    mismatch = np.linalg.norm(np.asarray(vol.center) - np.asarray(basis.center))
    if mismatch > 1e-6:
        raise ValidationError(
            f"basis center {basis.center} does not match volume center {vol.center}")
    vals, _ = query_volume_many(vol, basis.points)
    return np.abs(vals)


def compute_human_bps(joints: np.ndarray, basis: BPSBasis) -> np.ndarray:
    """Per-frame min distance from each basis point to any joint: (N, K).

    joints: (N, J, 3) world positions in the same frame as the basis. The
    computation is the definition itself (vectorized): the exact minimum over
    joints of Euclidean distances.
    """
    joints = np.asarray(joints, dtype=np.float64)
    if joints.ndim != 3 or joints.shape[2] != 3:
        raise ValidationError(f"joints must be (N, J, 3), got {joints.shape}")
    n = joints.shape[0]
    k = basis.points.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    # chunk frames to bound the (chunk, K, J, 3) temporary
    chunk = max(1, int(4e6 // (k * joints.shape[1])))
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        diff = basis.points[None, :, None, :] - joints[s:e, None, :, :]
        # explicit left-to-right sum keeps this bit-identical to the
        # scalar definition dx*dx + dy*dy + dz*dz
        sq = diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1] + diff[..., 2] * diff[..., 2]
        out[s:e] = np.sqrt(sq).min(axis=2)
    return out


try:
    import numba as _numba

    @_numba.njit(cache=True, fastmath=True)
    def _bps_kernel(joints, bpx, bpy, bpz, out):  # pragma: no cover - jitted
        n, j, _ = joints.shape
        k = bpx.shape[0]
        for f in range(n):
            for b in range(k):
                out[f, b] = 1e30
            for q in range(j):
                jx, jy, jz = joints[f, q, 0], joints[f, q, 1], joints[f, q, 2]
                for b in range(k):
                    dx = bpx[b] - jx
                    dy = bpy[b] - jy
                    dz = bpz[b] - jz
                    d = dx * dx + dy * dy + dz * dz
                    if d < out[f, b]:
                        out[f, b] = d
            for b in range(k):
                out[f, b] = np.sqrt(out[f, b])
except ImportError:  # pragma: no cover
    _bps_kernel = None


def compute_human_bps_fast(joints: np.ndarray, basis_points: np.ndarray) -> np.ndarray:
    """float32 feature-pipeline variant of compute_human_bps.

    Same quantity up to float32 rounding, fused for the training/sampling hot
    path (a numba kernel with a planar basis layout when available, otherwise
    a chunked numpy fallback).
    """
    joints = np.ascontiguousarray(joints, dtype=np.float32)
    bp = np.asarray(basis_points, dtype=np.float32)
    n, j, _ = joints.shape
    if _bps_kernel is not None:
        out = np.empty((n, bp.shape[0]), dtype=np.float32)
        _bps_kernel(joints,
                    np.ascontiguousarray(bp[:, 0]),
                    np.ascontiguousarray(bp[:, 1]),
                    np.ascontiguousarray(bp[:, 2]), out)
        return out
    bp_sq = np.einsum("ij,ij->i", bp, bp)[:, None]  # (K, 1)
    best = None
    for q in range(j):
        col = joints[:, q, :]  # (N, 3)
        d2 = bp_sq + np.einsum("ij,ij->i", col, col)[None, :] - 2.0 * (bp @ col.T)
        best = d2 if best is None else np.minimum(best, d2, out=best)
    np.maximum(best, 0.0, out=best)
    return np.sqrt(best, out=best).T.copy()  # (N, K)
