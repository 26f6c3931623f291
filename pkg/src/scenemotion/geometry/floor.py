"""Walkable-region floor maps and their signed 2D distance transform.

Sign convention (2D): d > 0 on non-walkable cells (bad / outside the walkable
region), d <= 0 on walkable cells. Collision guidance and the collision-ratio
metric penalize positive values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ValidationError

NO_OBSTACLE_CLAMP = -10.0  # meters, used when a map has no obstacle at all
_NODE_SNAP = 1e-9  # cell units; queries this close to a node use centered slopes


@dataclass(frozen=True)
class FloorMap:
    """Boolean walkability over an (x, z) grid.

    origin is the corner of cell (0, 0); cell centers sit at
    origin + (index + 0.5) * cell. walkable is indexed [ix, iz].
    """

    origin: tuple[float, float]
    cell: float
    walkable: np.ndarray  # (width, height) bool

    def __post_init__(self):
        w = np.ascontiguousarray(self.walkable, dtype=bool)
        if w.ndim != 2 or w.shape[0] < 2 or w.shape[1] < 2:
            raise ValidationError(f"floor map must be at least 2x2 cells, got {w.shape}")
        if self.cell <= 0:
            raise ValidationError("cell size must be positive")
        if not w.any():
            raise ValidationError("floor map has no walkable cell")
        w.flags.writeable = False
        object.__setattr__(self, "walkable", w)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def width(self) -> int:
        return self.walkable.shape[0]

    @property
    def height(self) -> int:
        return self.walkable.shape[1]

    def cell_center(self, ix: int, iz: int) -> tuple[float, float]:
        return (self.origin[0] + (ix + 0.5) * self.cell,
                self.origin[1] + (iz + 0.5) * self.cell)

    def cell_of(self, x: float, z: float) -> tuple[int, int]:
        ix = int(np.floor((x - self.origin[0]) / self.cell))
        iz = int(np.floor((z - self.origin[1]) / self.cell))
        return ix, iz

    def contains_cell(self, ix: int, iz: int) -> bool:
        return 0 <= ix < self.width and 0 <= iz < self.height


@dataclass(frozen=True)
class DistanceField2D:
    """Signed Euclidean distance (meters) over the same grid as a FloorMap."""

    origin: tuple[float, float]
    cell: float
    d: np.ndarray  # (width, height) float64

    def __post_init__(self):
        a = np.ascontiguousarray(self.d, dtype=np.float64)
        a.flags.writeable = False
        object.__setattr__(self, "d", a)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def width(self) -> int:
        return self.d.shape[0]

    @property
    def height(self) -> int:
        return self.d.shape[1]


def distance_transform(fmap: FloorMap) -> DistanceField2D:
    """Exact signed cell-center distance transform of a floor map.

    Non-walkable cells hold +distance to the nearest walkable cell center;
    walkable cells hold -distance to the nearest non-walkable center, or a
    -10 m clamp when the map has no obstacle. Distances use the exact
    Euclidean cell-center metric.
    """
    walk = fmap.walkable
    d = np.empty(walk.shape, dtype=np.float64)
    if walk.all():
        d.fill(NO_OBSTACLE_CLAMP)
        return DistanceField2D(fmap.origin, fmap.cell, d)

    ii, jj = np.meshgrid(np.arange(walk.shape[0]), np.arange(walk.shape[1]), indexing="ij")
    # feature transform gives, per cell, the indices of the nearest zero cell
    fi, fj = ndimage.distance_transform_edt(~walk, return_distances=False, return_indices=True)
    sq_to_walk = (ii - fi) ** 2 + (jj - fj) ** 2
    gi, gj = ndimage.distance_transform_edt(walk, return_distances=False, return_indices=True)
    sq_to_block = (ii - gi) ** 2 + (jj - gj) ** 2

    d[~walk] = fmap.cell * np.sqrt(sq_to_walk[~walk].astype(np.float64))
    d[walk] = -fmap.cell * np.sqrt(sq_to_block[walk].astype(np.float64))
    return DistanceField2D(fmap.origin, fmap.cell, d)


def _interp_1d_setup(g: np.ndarray, size: int):
    """Clamp grid coords, pick the bracketing node and the local fraction."""
    gc = np.clip(g, 0.0, size - 1.0)
    i = np.floor(gc).astype(np.int64)
    np.clip(i, 0, size - 2, out=i)
    frac = gc - i
    return gc, i, frac


def query_field(field: DistanceField2D, x: float, z: float) -> tuple[float, tuple[float, float]]:
    """Bilinear value and analytic gradient of the field at one point."""
    vals, grads = query_field_many(field, np.array([[x, z]], dtype=np.float64))
    return float(vals[0]), (float(grads[0, 0]), float(grads[0, 1]))


def query_field_many(field: DistanceField2D, xz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized query over (M, 2) points -> (values (M,), gradients (M, 2)).

    Inside the cell-center lattice the value is the bilinear interpolant and
    the gradient its analytic derivative; queries landing exactly on a node
    column/row average the two adjacent slopes (central differences at nodes).
    Outside the lattice the border value is extrapolated by adding the
    Euclidean distance to the border, so the gradient points away from the
    grid and guidance keeps pulling wayward points back.
    """
    xz = np.asarray(xz, dtype=np.float64)
    d = field.d
    w, h = d.shape
    cell = field.cell
    gx = (xz[:, 0] - field.origin[0]) / cell - 0.5
    gz = (xz[:, 1] - field.origin[1]) / cell - 0.5

    gxc, i, a = _interp_1d_setup(gx, w)
    gzc, j, b = _interp_1d_setup(gz, h)

    d00 = d[i, j]
    d10 = d[i + 1, j]
    d01 = d[i, j + 1]
    d11 = d[i + 1, j + 1]

    vals = (1 - a) * (1 - b) * d00 + a * (1 - b) * d10 + (1 - a) * b * d01 + a * b * d11

    # analytic bilinear slopes, in meters
    slope_x = ((1 - b) * (d10 - d00) + b * (d11 - d01)) / cell
    slope_z = ((1 - a) * (d01 - d00) + a * (d11 - d10)) / cell

    # node snap: average adjacent-cell slopes when the query sits on a lattice
    # line, which reproduces central differences at cell centers
    on_x_node = (a < _NODE_SNAP) & (i > 0)
    if np.any(on_x_node):
        k = np.nonzero(on_x_node)[0]
        il, jl, bl = i[k] - 1, j[k], b[k]
        left = ((1 - bl) * (d[il + 1, jl] - d[il, jl]) + bl * (d[il + 1, jl + 1] - d[il, jl + 1])) / cell
        slope_x[k] = 0.5 * (slope_x[k] + left)
    on_x_hi = (a > 1.0 - _NODE_SNAP) & (i + 2 < w)
    if np.any(on_x_hi):
        k = np.nonzero(on_x_hi)[0]
        ir, jr, br = i[k] + 1, j[k], b[k]
        right = ((1 - br) * (d[ir + 1, jr] - d[ir, jr]) + br * (d[ir + 1, jr + 1] - d[ir, jr + 1])) / cell
        slope_x[k] = 0.5 * (slope_x[k] + right)
    on_z_node = (b < _NODE_SNAP) & (j > 0)
    if np.any(on_z_node):
        k = np.nonzero(on_z_node)[0]
        ib, jb, ab = i[k], j[k] - 1, a[k]
        lo = ((1 - ab) * (d[ib, jb + 1] - d[ib, jb]) + ab * (d[ib + 1, jb + 1] - d[ib + 1, jb])) / cell
        slope_z[k] = 0.5 * (slope_z[k] + lo)
    on_z_hi = (b > 1.0 - _NODE_SNAP) & (j + 2 < h)
    if np.any(on_z_hi):
        k = np.nonzero(on_z_hi)[0]
        ib, jb, ab = i[k], j[k] + 1, a[k]
        hi = ((1 - ab) * (d[ib, jb + 1] - d[ib, jb]) + ab * (d[ib + 1, jb + 1] - d[ib + 1, jb])) / cell
        slope_z[k] = 0.5 * (slope_z[k] + hi)

    grads = np.stack([slope_x, slope_z], axis=1)

    # out-of-lattice extrapolation
    ox = (gx - gxc) * cell
    oz = (gz - gzc) * cell
    outside = (ox != 0.0) | (oz != 0.0)
    if np.any(outside):
        k = np.nonzero(outside)[0]
        dist = np.hypot(ox[k], oz[k])
        vals[k] += dist
        clamped_x = ox[k] != 0.0
        clamped_z = oz[k] != 0.0
        grads[k[clamped_x], 0] = (ox[k] / dist)[clamped_x]
        grads[k[clamped_z], 1] = (oz[k] / dist)[clamped_z]

    return vals, grads
