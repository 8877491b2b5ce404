import { describe, expect, it } from "vitest";

import { hillshade } from "../src/hillshade.js";

describe("hillshade", () => {
  it("flat terrain shades uniformly to sin(altitude)", () => {
    const image = { width: 8, height: 8, values: new Float64Array(64).fill(0.5) };
    const shade = hillshade(image, {
      azimuthDeg: 315, altitudeDeg: 30, metersPerUnit: 500, cellSize: 30,
    });
    const expected = Math.sin((30 * Math.PI) / 180);
    for (const s of shade) expect(s).toBeCloseTo(expected, 10);
  });

  it("stays inside [0, 1] on rough terrain", () => {
    const values = new Float64Array(256);
    let state = 12345;
    for (let i = 0; i < values.length; i++) {
      state = (state * 1103515245 + 12345) % 2 ** 31;
      values[i] = state / 2 ** 31;
    }
    const shade = hillshade({ width: 16, height: 16, values }, {
      azimuthDeg: 90, altitudeDeg: 10, metersPerUnit: 800, cellSize: 30,
    });
    for (const s of shade) {
      expect(s).toBeGreaterThanOrEqual(0);
      expect(s).toBeLessThanOrEqual(1);
    }
  });

  it("slopes facing the light shade brighter than slopes facing away", () => {
    // a ramp rising eastward presents its face to the west
    const width = 16;
    const values = new Float64Array(width * width);
    for (let y = 0; y < width; y++) {
      for (let x = 0; x < width; x++) values[y * width + x] = x / (width - 1);
    }
    const litFromEast = hillshade({ width, height: width, values }, {
      azimuthDeg: 90, altitudeDeg: 30, metersPerUnit: 400, cellSize: 30,
    });
    const litFromWest = hillshade({ width, height: width, values }, {
      azimuthDeg: 270, altitudeDeg: 30, metersPerUnit: 400, cellSize: 30,
    });
    expect(litFromWest[8 * width + 8]).toBeGreaterThan(litFromEast[8 * width + 8]);
  });
});
