"""3D signed distance grids for interaction objects.

Sign convention (3D): sdf < 0 inside the object (bad / penetrating), > 0
outside. Penetration guidance and metrics penalize negative values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

_NODE_SNAP = 1e-9

DEFAULT_CELL = 0.025
DEFAULT_PADDING = 1.2  # meters beyond the geometry, covers the BPS sphere


@dataclass(frozen=True)
class ObjectVolume:
    """Signed distance samples on a regular grid around one object."""

    origin: tuple[float, float, float]
    cell: float
    sdf: np.ndarray  # (nx, ny, nz) float32
    center: tuple[float, float, float]

    def __post_init__(self):
        a = np.ascontiguousarray(self.sdf, dtype=np.float32)
        if a.ndim != 3 or min(a.shape) < 2:
            raise ValidationError(f"sdf grid must be 3D with >=2 cells per axis, got {a.shape}")
        if self.cell <= 0:
            raise ValidationError("cell size must be positive")
        if not np.all(np.isfinite(a)):
            raise ValidationError("sdf grid contains non-finite values")
        a.flags.writeable = False
        object.__setattr__(self, "sdf", a)
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.sdf.shape


def box_sdf(points: np.ndarray, half_extents: np.ndarray, position: np.ndarray,
            yaw_cos: float = 1.0, yaw_sin: float = 0.0) -> np.ndarray:
    """Analytic signed distance from (..., 3) points to a yawed box."""
    p = np.asarray(points, dtype=np.float64) - np.asarray(position, dtype=np.float64)
    # rotate world -> box frame (inverse yaw about vertical)
    lx = yaw_cos * p[..., 0] - yaw_sin * p[..., 2]
    lz = yaw_sin * p[..., 0] + yaw_cos * p[..., 2]
    q = np.stack([np.abs(lx), np.abs(p[..., 1]), np.abs(lz)], axis=-1) - half_extents
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(q.max(axis=-1), 0.0)
    return outside + inside


def _grid_points(origin, cell, dims):
    xs = origin[0] + (np.arange(dims[0]) + 0.5) * cell
    ys = origin[1] + (np.arange(dims[1]) + 0.5) * cell
    zs = origin[2] + (np.arange(dims[2]) + 0.5) * cell
    return xs, ys, zs


def _volume_layout(lo: np.ndarray, hi: np.ndarray, cell: float, padding: float):
    lo = lo - padding
    hi = hi + padding
    dims = np.maximum(np.ceil((hi - lo) / cell).astype(int), 2)
    return tuple(lo.tolist()), tuple(dims.tolist())


def voxelize_box_object(half_extents, position=(0.0, 0.0, 0.0), yaw: float = 0.0,
                        cell: float = DEFAULT_CELL, padding: float = DEFAULT_PADDING) -> ObjectVolume:
    """Sample the analytic SDF of one yawed box on a padded grid."""
    h = np.asarray(half_extents, dtype=np.float64)
    if np.any(h <= 0):
        raise ValidationError("box half extents must be positive")
    pos = np.asarray(position, dtype=np.float64)
    r = float(np.linalg.norm(h))
    origin, dims = _volume_layout(pos - r, pos + r, cell, padding)
    xs, ys, zs = _grid_points(origin, cell, dims)
    pts = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1)
    sdf = box_sdf(pts, h, pos, np.cos(yaw), np.sin(yaw))
    return ObjectVolume(origin, cell, sdf.astype(np.float32), tuple(pos.tolist()))


def voxelize_box_union(boxes, center=None, cell: float = DEFAULT_CELL,
                       padding: float = DEFAULT_PADDING) -> ObjectVolume:
    """Union of yawed boxes via the min of their SDFs.

    boxes: iterable of (half_extents, position, yaw). The min underestimates
    the true distance only outside overlap regions, which keeps the
    negative-inside contract intact.
    """
    boxes = [(np.asarray(h, np.float64), np.asarray(p, np.float64), float(y)) for h, p, y in boxes]
    if not boxes:
        raise ValidationError("box union needs at least one box")
    los, his = [], []
    for h, p, _ in boxes:
        r = float(np.linalg.norm(h))
        los.append(p - r)
        his.append(p + r)
    lo = np.min(los, axis=0)
    hi = np.max(his, axis=0)
    origin, dims = _volume_layout(lo, hi, cell, padding)
    xs, ys, zs = _grid_points(origin, cell, dims)
    pts = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1)
    sdf = None
    for h, p, yaw in boxes:
        s = box_sdf(pts, h, p, np.cos(yaw), np.sin(yaw))
        sdf = s if sdf is None else np.minimum(sdf, s)
    if center is None:
        center = 0.5 * (lo + hi)
    return ObjectVolume(origin, cell, sdf.astype(np.float32), tuple(np.asarray(center, np.float64).tolist()))


def _point_triangle_distance(points: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Exact unsigned distance from (M, 3) points to one triangle."""
    a, b, c = tri[0], tri[1], tri[2]
    ab = b - a
    ac = c - a
    ap = points - a
    d1 = ap @ ab
    d2 = ap @ ac
    bp = points - b
    d3 = bp @ ab
    d4 = bp @ ac
    cp = points - c
    d5 = cp @ ab
    d6 = cp @ ac

    nearest = np.empty_like(points)
    done = np.zeros(len(points), dtype=bool)

    def assign(mask, value):
        m = mask & ~done
        nearest[m] = value[m] if value.ndim == 2 else value
        done[m] = True

    assign((d1 <= 0) & (d2 <= 0), np.broadcast_to(a, points.shape))
    assign((d3 >= 0) & (d4 <= d3), np.broadcast_to(b, points.shape))
    assign((d6 >= 0) & (d5 <= d6), np.broadcast_to(c, points.shape))

    vc = d1 * d4 - d3 * d2
    v_ab = np.divide(d1, d1 - d3, out=np.zeros_like(d1), where=(d1 - d3) != 0)
    assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v_ab[:, None] * ab)

    vb = d5 * d2 - d1 * d6
    w_ac = np.divide(d2, d2 - d6, out=np.zeros_like(d2), where=(d2 - d6) != 0)
    assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w_ac[:, None] * ac)

    va = d3 * d6 - d5 * d4
    w_bc = np.divide(d4 - d3, (d4 - d3) + (d5 - d6), out=np.zeros_like(d4),
                     where=((d4 - d3) + (d5 - d6)) != 0)
    assign((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + w_bc[:, None] * (c - b))

    denom = va + vb + vc
    v = np.divide(vb, denom, out=np.zeros_like(vb), where=denom != 0)
    w = np.divide(vc, denom, out=np.zeros_like(vc), where=denom != 0)
    assign(np.ones(len(points), dtype=bool), a + v[:, None] * ab + w[:, None] * ac)

    return np.linalg.norm(points - nearest, axis=1)


def _validate_mesh(tris: np.ndarray) -> None:
    areas = 0.5 * np.linalg.norm(
        np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]), axis=1)
    if np.any(areas < 1e-12):
        raise ValidationError("degenerate mesh: zero-area triangle")


def voxelize_mesh(triangles: np.ndarray, cell: float = DEFAULT_CELL,
                  padding: float = DEFAULT_PADDING, center=None) -> ObjectVolume:
    """SDF grid for a watertight triangle mesh (T, 3, 3).

    Unsigned distances are exact point-triangle distances; the sign comes
    from +x ray-crossing parity per grid column.
    """
    tris = np.asarray(triangles, dtype=np.float64)
    if tris.ndim != 3 or tris.shape[1:] != (3, 3) or len(tris) == 0:
        raise ValidationError(f"triangles must be (T, 3, 3), got {tris.shape}")
    _validate_mesh(tris)

    lo = tris.reshape(-1, 3).min(axis=0)
    hi = tris.reshape(-1, 3).max(axis=0)
    origin, dims = _volume_layout(lo, hi, cell, padding)
    xs, ys, zs = _grid_points(origin, cell, dims)
    pts = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)

    dist = np.full(len(pts), np.inf)
    for tri in tris:
        np.minimum(dist, _point_triangle_distance(pts, tri), out=dist)

    # parity of +x ray crossings evaluated per (y, z) column; rays are
    # jittered off the lattice so they cannot graze shared triangle edges
    yy, zz = np.meshgrid(ys, zs, indexing="ij")
    cols = np.stack([yy.ravel(), zz.ravel()], axis=1)  # (ny*nz, 2)
    cols = cols + cell * np.array([1.2345671e-3, 2.3456713e-3])
    crossings = [[] for _ in range(len(cols))]
    for tri in tris:
        p0, p1, p2 = tri
        e1 = p1 - p0
        e2 = p2 - p0
        det = e1[1] * e2[2] - e2[1] * e1[2]
        if abs(det) < 1e-15:
            continue
        ry = cols[:, 0] - p0[1]
        rz = cols[:, 1] - p0[2]
        u = (ry * e2[2] - rz * e2[1]) / det
        v = (rz * e1[1] - ry * e1[2]) / det
        hit = (u >= 0) & (v >= 0) & (u + v <= 1)
        if not hit.any():
            continue
        x_hit = p0[0] + u[hit] * e1[0] + v[hit] * e2[0]
        for idx, xh in zip(np.nonzero(hit)[0], x_hit):
            crossings[idx].append(xh)

    inside = np.zeros((dims[0], len(cols)), dtype=bool)
    for ci, xh in enumerate(crossings):
        if not xh:
            continue
        counts = (np.asarray(xh)[None, :] > xs[:, None]).sum(axis=1)
        inside[:, ci] = (counts % 2) == 1

    sdf = dist.reshape(dims)
    sdf[inside.reshape(dims)] *= -1.0
    if center is None:
        center = 0.5 * (lo + hi)
    return ObjectVolume(origin, cell, sdf.astype(np.float32), tuple(np.asarray(center, np.float64).tolist()))


def query_volume(vol: ObjectVolume, p) -> tuple[float, tuple[float, float, float]]:
    vals, grads = query_volume_many(vol, np.asarray(p, dtype=np.float64)[None, :])
    return float(vals[0]), tuple(float(g) for g in grads[0])


def query_volume_many(vol: ObjectVolume, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Trilinear value and analytic gradient at (M, 3) points.

    Same boundary handling as the 2D field: node queries average adjacent
    slopes, out-of-grid queries extrapolate border value + distance with a
    gradient pointing away from the grid.
    """
    pts = np.asarray(pts, dtype=np.float64)
    s = vol.sdf
    nx, ny, nz = s.shape
    cell = vol.cell
    g = [(pts[:, k] - vol.origin[k]) / cell - 0.5 for k in range(3)]

    idx, frac, clamped = [], [], []
    for k, size in zip(range(3), (nx, ny, nz)):
        gc = np.clip(g[k], 0.0, size - 1.0)
        i = np.floor(gc).astype(np.int64)
        np.clip(i, 0, size - 2, out=i)
        idx.append(i)
        frac.append(gc - i)
        clamped.append((g[k] - gc) * cell)

    i, j, k = idx
    a, b, c = frac
    corners = {}
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                corners[(di, dj, dk)] = s[i + di, j + dj, k + dk].astype(np.float64)

    def tri_value(aa, bb, cc):
        v = 0.0
        for (di, dj, dk), cv in corners.items():
            wgt = (aa if di else 1 - aa) * (bb if dj else 1 - bb) * (cc if dk else 1 - cc)
            v = v + wgt * cv
        return v

    vals = tri_value(a, b, c)

    def axis_slope(axis, ii, jj, kk, aa, bb, cc):
        # derivative of the trilinear interpolant along one axis, at cell (ii, jj, kk)
        def v(di, dj, dk):
            return s[ii + di, jj + dj, kk + dk].astype(np.float64)
        if axis == 0:
            return ((1 - bb) * (1 - cc) * (v(1, 0, 0) - v(0, 0, 0))
                    + bb * (1 - cc) * (v(1, 1, 0) - v(0, 1, 0))
                    + (1 - bb) * cc * (v(1, 0, 1) - v(0, 0, 1))
                    + bb * cc * (v(1, 1, 1) - v(0, 1, 1))) / cell
        if axis == 1:
            return ((1 - aa) * (1 - cc) * (v(0, 1, 0) - v(0, 0, 0))
                    + aa * (1 - cc) * (v(1, 1, 0) - v(1, 0, 0))
                    + (1 - aa) * cc * (v(0, 1, 1) - v(0, 0, 1))
                    + aa * cc * (v(1, 1, 1) - v(1, 0, 1))) / cell
        return ((1 - aa) * (1 - bb) * (v(0, 0, 1) - v(0, 0, 0))
                + aa * (1 - bb) * (v(1, 0, 1) - v(1, 0, 0))
                + (1 - aa) * bb * (v(0, 1, 1) - v(0, 1, 0))
                + aa * bb * (v(1, 1, 1) - v(1, 1, 0))) / cell

    grads = np.stack([
        axis_slope(0, i, j, k, a, b, c),
        axis_slope(1, i, j, k, a, b, c),
        axis_slope(2, i, j, k, a, b, c),
    ], axis=1)

    # node snap per axis: average with the neighboring cell's slope
    sizes = (nx, ny, nz)
    for axis in range(3):
        f = frac[axis]
        ii, jj, kk = (x.copy() for x in idx)
        lo_mask = (f < _NODE_SNAP) & (idx[axis] > 0)
        if np.any(lo_mask):
            m = np.nonzero(lo_mask)[0]
            shifted = [ii[m], jj[m], kk[m]]
            shifted[axis] = shifted[axis] - 1
            other = axis_slope(axis, shifted[0], shifted[1], shifted[2],
                               a[m], b[m], c[m])
            grads[m, axis] = 0.5 * (grads[m, axis] + other)
        hi_mask = (f > 1.0 - _NODE_SNAP) & (idx[axis] + 2 < sizes[axis])
        if np.any(hi_mask):
            m = np.nonzero(hi_mask)[0]
            shifted = [ii[m], jj[m], kk[m]]
            shifted[axis] = shifted[axis] + 1
            other = axis_slope(axis, shifted[0], shifted[1], shifted[2],
                               a[m], b[m], c[m])
            grads[m, axis] = 0.5 * (grads[m, axis] + other)

    off = np.stack(clamped, axis=1)
    outside = np.any(off != 0.0, axis=1)
    if np.any(outside):
        m = np.nonzero(outside)[0]
        dist = np.linalg.norm(off[m], axis=1)
        vals[m] += dist
        for axis in range(3):
            sel = off[m, axis] != 0.0
            grads[m[sel], axis] = (off[m, axis] / dist)[sel]

    return vals, grads
