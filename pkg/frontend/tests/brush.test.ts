import { describe, expect, it } from "vitest";

import { applyStroke, makeCanvas, normalizeCanvas } from "../src/brush.js";

describe("applyStroke", () => {
  it("zero-strength stroke leaves the terrain unchanged", () => {
    const canvas = makeCanvas(16, 16, 50);
    const before = Float64Array.from(canvas.elevations);
    for (const tool of ["raise", "lower", "set-level", "flatten", "smooth",
                        "mask-paint"] as const) {
      applyStroke(canvas, {
        tool, radius: 3, strength: 0, level: 10, path: [[8, 8]],
      });
    }
    expect(canvas.elevations).toEqual(before);
  });

  it("raise adds height with gaussian falloff", () => {
    const canvas = makeCanvas(16, 16, 0);
    applyStroke(canvas, { tool: "raise", radius: 4, strength: 100, path: [[8, 8]] });
    const at = (x: number, y: number) => canvas.elevations[y * 16 + x];
    expect(at(8, 8)).toBeCloseTo(100, 5);
    expect(at(10, 8)).toBeGreaterThan(0);
    expect(at(10, 8)).toBeLessThan(at(9, 8));
    expect(at(0, 0)).toBeCloseTo(0, 3);
  });

  it("lower mirrors raise", () => {
    const canvas = makeCanvas(8, 8, 200);
    applyStroke(canvas, { tool: "lower", radius: 2, strength: 50, path: [[4, 4]] });
    expect(canvas.elevations[4 * 8 + 4]).toBeCloseTo(150, 5);
  });

  it("set-level plateaus at the chosen level under the brush center", () => {
    const canvas = makeCanvas(16, 16, 0);
    applyStroke(canvas, {
      tool: "set-level", radius: 3, strength: 1, level: 120,
      path: [[5, 5], [6, 5], [7, 5]],
    });
    expect(canvas.elevations[5 * 16 + 5]).toBeCloseTo(120, 5);
    expect(canvas.elevations[5 * 16 + 6]).toBeCloseTo(120, 5);
  });

  it("mask-paint at alpha 1 over every cell yields an all-ones mask", () => {
    const canvas = makeCanvas(8, 8, 0);
    const path: Array<[number, number]> = [];
    for (let y = 0; y < 8; y++) for (let x = 0; x < 8; x++) path.push([x, y]);
    applyStroke(canvas, { tool: "mask-paint", radius: 2, strength: 1, path });
    for (const alpha of canvas.mask) expect(alpha).toBeCloseTo(1, 6);
    // elevations untouched by mask painting
    for (const z of canvas.elevations) expect(z).toBe(0);
  });

  it("smooth reduces local variance", () => {
    const canvas = makeCanvas(16, 16, 0);
    canvas.elevations[8 * 16 + 8] = 500; // spike
    applyStroke(canvas, { tool: "smooth", radius: 3, strength: 1, path: [[8, 8]] });
    expect(canvas.elevations[8 * 16 + 8]).toBeLessThan(500);
  });

  it("clips strokes outside the canvas instead of erroring", () => {
    const canvas = makeCanvas(8, 8, 0);
    applyStroke(canvas, {
      tool: "raise", radius: 4, strength: 10,
      path: [[-3, -3], [20, 4], [4, 20]],
    });
    for (const z of canvas.elevations) expect(Number.isFinite(z)).toBe(true);
  });

  it("rejects malformed strokes", () => {
    const canvas = makeCanvas(8, 8, 0);
    expect(() => applyStroke(canvas, {
      tool: "raise", radius: 0, strength: 1, path: [[1, 1]],
    })).toThrow(/radius/);
    expect(() => applyStroke(canvas, {
      tool: "raise", radius: 2, strength: 1, path: [],
    })).toThrow(/path/);
    expect(() => applyStroke(canvas, {
      tool: "set-level", radius: 2, strength: 1, path: [[1, 1]],
    })).toThrow(/level/);
  });
});

describe("normalizeCanvas", () => {
  it("maps the range onto [0, 1]", () => {
    const canvas = makeCanvas(2, 2, 0);
    canvas.elevations.set([0, 50, 100, 25]);
    const { values, minM, maxM } = normalizeCanvas(canvas);
    expect(minM).toBe(0);
    expect(maxM).toBe(100);
    expect(Array.from(values)).toEqual([0, 0.5, 1, 0.25]);
  });

  it("flat canvases map to mid-gray", () => {
    const canvas = makeCanvas(2, 2, 42);
    const { values } = normalizeCanvas(canvas);
    expect(Array.from(values)).toEqual([0.5, 0.5, 0.5, 0.5]);
  });
});
