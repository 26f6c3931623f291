/** Canvas rendering of the floor map and trajectory overlays. */

import { decodeWalkable, SceneJson, Snapshot } from "./api.js";
import { toPixels, Viewport, Point } from "./coords.js";

export interface Overlays {
  drawn: Point[] | null; // meters
  astar: Point[] | null;
  trajectory: Point[] | null;
  snapshot: Point[] | null;
  start: Point | null;
  goal: Point | null;
}

export function emptyOverlays(): Overlays {
  return { drawn: null, astar: null, trajectory: null, snapshot: null, start: null, goal: null };
}

export function viewportFor(scene: SceneJson, maxPixels = 720): Viewport {
  const scale = Math.max(1, Math.floor(maxPixels / Math.max(scene.floor.width, scene.floor.height)));
  return { floor: scene.floor, scale };
}

export function drawFloor(ctx: CanvasRenderingContext2D, scene: SceneJson, v: Viewport): void {
  const { width, height } = scene.floor;
  const walk = decodeWalkable(scene.floor.walkable, width, height);
  ctx.fillStyle = "#2b2b33";
  ctx.fillRect(0, 0, width * v.scale, height * v.scale);
  ctx.fillStyle = "#f4f2ec";
  for (let ix = 0; ix < width; ix++) {
    for (let iz = 0; iz < height; iz++) {
      if (walk[ix * height + iz]) {
        ctx.fillRect(ix * v.scale, iz * v.scale, v.scale, v.scale);
      }
    }
  }
  // object footprints, lightly shaded with a front tick
  for (const obj of scene.objects) {
    const [px, , pz] = obj.pose.position;
    const p = toPixels(v, [px, pz]);
    ctx.fillStyle = obj.category === "chair" ? "#7c9c6e" : "#8b8b96";
    const r = ((obj.half_extents?.[0] ?? 0.2) / scene.floor.cell) * v.scale;
    ctx.beginPath();
    ctx.arc(p[0], p[1], Math.max(r, 3), 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function drawPolyline(
  ctx: CanvasRenderingContext2D,
  v: Viewport,
  points: Point[],
  color: string,
  width = 2,
  dash: number[] = [],
): void {
  if (points.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.beginPath();
  const first = toPixels(v, points[0]);
  ctx.moveTo(first[0], first[1]);
  for (let i = 1; i < points.length; i++) {
    const p = toPixels(v, points[i]);
    ctx.lineTo(p[0], p[1]);
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

export function drawMarker(ctx: CanvasRenderingContext2D, v: Viewport, m: Point, color: string): void {
  const p = toPixels(v, m);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(p[0], p[1], 5, 0, 2 * Math.PI);
  ctx.fill();
}

export function render(
  ctx: CanvasRenderingContext2D,
  scene: SceneJson,
  v: Viewport,
  overlays: Overlays,
): void {
  drawFloor(ctx, scene, v);
  if (overlays.astar) drawPolyline(ctx, v, overlays.astar, "#4a90d9", 2, [6, 4]);
  if (overlays.drawn) drawPolyline(ctx, v, overlays.drawn, "#d98b4a", 2);
  if (overlays.snapshot) drawPolyline(ctx, v, overlays.snapshot, "#b5b5c3", 2);
  if (overlays.trajectory) drawPolyline(ctx, v, overlays.trajectory, "#c0392b", 3);
  if (overlays.start) drawMarker(ctx, v, overlays.start, "#27ae60");
  if (overlays.goal) drawMarker(ctx, v, overlays.goal, "#8e44ad");
}

/** Frames from the service are (…, x, y, z, …) rows; project to (x, z). */
export function framesToXZ(frames: number[][]): Point[] {
  return frames.map((f) => [f[0], f[2]] as Point);
}

export function snapshotToXZ(snap: Snapshot): Point[] {
  return snap.frames.map((f) => [f[0], f[1]] as Point);
}
