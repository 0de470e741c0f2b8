import { describe, expect, it } from "vitest";
import { minMaxDecimate, type XY } from "../src/decimate.js";

function wave(n: number): XY[] {
  const out: XY[] = [];
  for (let i = 0; i < n; i++) {
    out.push({ x: i, y: Math.sin(i * 0.37) * 50 + (i % 97 === 0 ? 300 : 0) });
  }
  return out;
}

describe("minMaxDecimate", () => {
  it("passes small inputs through untouched", () => {
    const pts = wave(8);
    expect(minMaxDecimate(pts, 100)).toEqual(pts);
  });

  it("stays within the point budget", () => {
    const out = minMaxDecimate(wave(50000), 400);
    expect(out.length).toBeLessThanOrEqual(400);
    expect(out.length).toBeGreaterThan(200);
  });

  it("keeps the first and last samples", () => {
    const pts = wave(12345);
    const out = minMaxDecimate(pts, 64);
    expect(out[0]).toEqual(pts[0]);
    expect(out[out.length - 1]).toEqual(pts[pts.length - 1]);
  });

  it("preserves the global extremes so spikes stay visible", () => {
    const pts = wave(20000);
    const yMax = Math.max(...pts.map((p) => p.y));
    const yMin = Math.min(...pts.map((p) => p.y));
    const out = minMaxDecimate(pts, 120);
    expect(Math.max(...out.map((p) => p.y))).toBe(yMax);
    expect(Math.min(...out.map((p) => p.y))).toBe(yMin);
  });

  it("emits points in non-decreasing x order", () => {
    const out = minMaxDecimate(wave(9999), 150);
    for (let i = 1; i < out.length; i++) {
      expect(out[i]!.x).toBeGreaterThanOrEqual(out[i - 1]!.x);
    }
  });

  it("rejects a useless budget", () => {
    expect(() => minMaxDecimate(wave(10), 3)).toThrow(/budget/);
  });
});
