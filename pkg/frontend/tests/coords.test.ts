import { describe, expect, it } from "vitest";
import {
  canvasSize, polylineLength, resamplePolyline, toMeters, toPixels, Viewport, Point,
} from "../src/coords.js";

const viewport: Viewport = {
  floor: { origin: [-3.2, -2.7], cell: 0.05, width: 128, height: 108 },
  scale: 5,
};

describe("pixel/meter round trip", () => {
  it("stays under one pixel for arbitrary points", () => {
    for (let i = 0; i < 500; i++) {
      const px: Point = [Math.random() * 640, Math.random() * 540];
      const back = toPixels(viewport, toMeters(viewport, px));
      expect(Math.hypot(back[0] - px[0], back[1] - px[1])).toBeLessThan(1.0);
    }
  });

  it("meters -> pixels -> meters stays under one cell", () => {
    for (let i = 0; i < 200; i++) {
      const m: Point = [-3.2 + Math.random() * 6.4, -2.7 + Math.random() * 5.4];
      const back = toMeters(viewport, toPixels(viewport, m));
      expect(Math.hypot(back[0] - m[0], back[1] - m[1])).toBeLessThan(viewport.floor.cell);
    }
  });

  it("canvas size matches the grid dimensions", () => {
    expect(canvasSize(viewport)).toEqual([128 * 5, 108 * 5]);
  });
});

describe("resamplePolyline", () => {
  it("keeps exact endpoints and uniform spacing", () => {
    const path: Point[] = [[0, 0], [3, 0], [3, 4]];
    const out = resamplePolyline(path, 15);
    expect(out).toHaveLength(15);
    expect(out[0]).toEqual([0, 0]);
    expect(out[14]).toEqual([3, 4]);
    const steps: number[] = [];
    for (let i = 1; i < out.length; i++) {
      steps.push(Math.hypot(out[i][0] - out[i - 1][0], out[i][1] - out[i - 1][1]));
    }
    const mean = steps.reduce((a, b) => a + b, 0) / steps.length;
    for (const s of steps) expect(Math.abs(s - mean)).toBeLessThan(1e-9);
  });

  it("keeps nearly the whole length (corners get chorded)", () => {
    const path: Point[] = [[0, 0], [1, 1], [2, 0], [4, 2]];
    const out = resamplePolyline(path, 64);
    const len = polylineLength(out);
    const ref = polylineLength(path);
    expect(len).toBeLessThanOrEqual(ref + 1e-9);
    expect(len).toBeGreaterThan(0.98 * ref);
  });

  it("handles degenerate inputs", () => {
    expect(resamplePolyline([[2, 3]], 4)).toEqual([[2, 3], [2, 3], [2, 3], [2, 3]]);
    expect(resamplePolyline([], 4)).toEqual([]);
  });
});
