/**
 * Coordinate plumbing between canvas pixels and scene meters.
 *
 * The floor map grid is indexed [ix, iz] with the cell (0, 0) corner at
 * `origin`; the canvas draws ix along +x (right) and iz along +y (down) at
 * `scale` pixels per grid cell.
 */

export interface FloorInfo {
  origin: [number, number]; // (x0, z0) meters
  cell: number; // meters per grid cell
  width: number; // cells
  height: number; // cells
}

export interface Viewport {
  floor: FloorInfo;
  scale: number; // pixels per grid cell
}

export type Point = [number, number];

export function toMeters(v: Viewport, px: Point): Point {
  const gx = px[0] / v.scale;
  const gz = px[1] / v.scale;
  return [v.floor.origin[0] + gx * v.floor.cell, v.floor.origin[1] + gz * v.floor.cell];
}

export function toPixels(v: Viewport, m: Point): Point {
  const gx = (m[0] - v.floor.origin[0]) / v.floor.cell;
  const gz = (m[1] - v.floor.origin[1]) / v.floor.cell;
  return [gx * v.scale, gz * v.scale];
}

export function canvasSize(v: Viewport): [number, number] {
  return [v.floor.width * v.scale, v.floor.height * v.scale];
}

/** Polyline length in whatever units the points carry. */
export function polylineLength(points: Point[]): number {
  let total = 0;
  for (let i = 1; i < points.length; i++) {
    total += Math.hypot(points[i][0] - points[i - 1][0], points[i][1] - points[i - 1][1]);
  }
  return total;
}

/**
 * Resample a polyline to exactly n points at uniform arc length, keeping the
 * exact endpoints. Mirrors the server-side resampling so a drawn route and
 * its echo line up point for point.
 */
export function resamplePolyline(points: Point[], n: number): Point[] {
  if (points.length === 0 || n <= 0) return [];
  if (points.length === 1) return new Array(n).fill(points[0]).map((p) => [p[0], p[1]]);
  const cum: number[] = [0];
  for (let i = 1; i < points.length; i++) {
    cum.push(cum[i - 1] + Math.hypot(points[i][0] - points[i - 1][0], points[i][1] - points[i - 1][1]));
  }
  const total = cum[cum.length - 1];
  if (total === 0) return new Array(n).fill(0).map(() => [points[0][0], points[0][1]]);
  const out: Point[] = [];
  let seg = 0;
  for (let k = 0; k < n; k++) {
    const target = (total * k) / (n - 1);
    while (seg < points.length - 2 && cum[seg + 1] < target) seg++;
    const span = cum[seg + 1] - cum[seg];
    const t = span > 0 ? (target - cum[seg]) / span : 0;
    out.push([
      points[seg][0] + t * (points[seg + 1][0] - points[seg][0]),
      points[seg][1] + t * (points[seg + 1][1] - points[seg][1]),
    ]);
  }
  out[0] = [points[0][0], points[0][1]];
  out[n - 1] = [points[points.length - 1][0], points[points.length - 1][1]];
  return out;
}
