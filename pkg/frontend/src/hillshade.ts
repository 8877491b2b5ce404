/**
 * Client-side shaded relief, mirroring the service's hillshade math so
 * slider drags can re-light the preview without a round trip. The server
 * endpoint stays authoritative; parity is covered by an integration test.
 */

import type { GrayImage } from "./png16.js";

export interface ShadeOptions {
  azimuthDeg: number;
  altitudeDeg: number;
  /** Vertical exaggeration: elevation span in meters over cell size. */
  metersPerUnit: number;
  cellSize: number;
}

export function hillshade(image: GrayImage, options: ShadeOptions): Float64Array {
  const { width, height, values } = image;
  const az = (options.azimuthDeg * Math.PI) / 180;
  const alt = (options.altitudeDeg * Math.PI) / 180;
  const le = Math.cos(alt) * Math.sin(az);
  const ln = Math.cos(alt) * Math.cos(az);
  const lu = Math.sin(alt);
  const scale = options.metersPerUnit / options.cellSize;
  const out = new Float64Array(width * height);
  const at = (x: number, y: number) => values[y * width + x];
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      // central differences, one-sided at the borders (numpy.gradient rules)
      let dzdx: number;
      if (width === 1) dzdx = 0;
      else if (x === 0) dzdx = at(1, y) - at(0, y);
      else if (x === width - 1) dzdx = at(x, y) - at(x - 1, y);
      else dzdx = (at(x + 1, y) - at(x - 1, y)) / 2;
      let dzdy: number;
      if (height === 1) dzdy = 0;
      else if (y === 0) dzdy = at(x, 1) - at(x, 0);
      else if (y === height - 1) dzdy = at(x, y) - at(x, y - 1);
      else dzdy = (at(x, y + 1) - at(x, y - 1)) / 2;
      dzdx *= scale;
      dzdy *= scale;
      const norm = Math.sqrt(dzdx * dzdx + dzdy * dzdy + 1);
      const shade = (-dzdx * le + dzdy * ln + lu) / norm;
      out[y * width + x] = Math.min(1, Math.max(0, shade));
    }
  }
  return out;
}
