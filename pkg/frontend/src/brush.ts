/**
 * Client-side sketch editing: brush strokes over the elevation canvas (or
 * the region-mask layer for mask-paint). All edits are local with Gaussian
 * falloff over the brush radius; the server remains the authority on the
 * stored terrain, the canvas is only a sketching surface.
 */

export type BrushTool =
  | "raise"
  | "lower"
  | "set-level"
  | "flatten"
  | "smooth"
  | "mask-paint";

export interface BrushStroke {
  tool: BrushTool;
  /** Brush radius in cells, >= 1. */
  radius: number;
  /** Edit intensity in [0, 1] for lerp tools, meters for raise/lower,
   *  alpha for mask-paint. Zero-strength strokes are no-ops. */
  strength: number;
  /** Target elevation in meters; set-level only. */
  level?: number;
  /** Visited canvas cells as [x, y] pairs. */
  path: Array<[number, number]>;
}

export interface Canvas {
  width: number;
  height: number;
  elevations: Float64Array;
  mask: Float64Array;
}

export function makeCanvas(width: number, height: number,
                           fill = 0): Canvas {
  return {
    width,
    height,
    elevations: new Float64Array(width * height).fill(fill),
    mask: new Float64Array(width * height),
  };
}

export function validateStroke(stroke: BrushStroke): void {
  if (stroke.radius < 1) throw new Error("brush radius must be >= 1");
  if (stroke.path.length === 0) throw new Error("stroke path is empty");
  if (!Number.isFinite(stroke.strength)) throw new Error("strength must be finite");
  if (stroke.tool === "set-level" && !Number.isFinite(stroke.level ?? NaN)) {
    throw new Error("set-level strokes need a finite level");
  }
}

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

function neighborhoodMean(values: Float64Array, width: number, height: number,
                          cx: number, cy: number, radius: number): number {
  let sum = 0;
  let count = 0;
  const r = Math.ceil(radius);
  for (let y = Math.max(0, cy - r); y <= Math.min(height - 1, cy + r); y++) {
    for (let x = Math.max(0, cx - r); x <= Math.min(width - 1, cx + r); x++) {
      sum += values[y * width + x];
      count++;
    }
  }
  return count ? sum / count : 0;
}

function boxBlurAt(values: Float64Array, width: number, height: number,
                   x: number, y: number): number {
  let sum = 0;
  let count = 0;
  for (let dy = -1; dy <= 1; dy++) {
    for (let dx = -1; dx <= 1; dx++) {
      const nx = x + dx;
      const ny = y + dy;
      if (nx >= 0 && nx < width && ny >= 0 && ny < height) {
        sum += values[ny * width + nx];
        count++;
      }
    }
  }
  return sum / count;
}

/**
 * Apply one stroke in place. Each path point stamps a Gaussian footprint
 * (sigma = radius / 2, support 2 * radius); points outside the canvas are
 * clipped, never errors.
 */
export function applyStroke(canvas: Canvas, stroke: BrushStroke): Canvas {
  validateStroke(stroke);
  if (stroke.strength === 0) return canvas;
  const { width, height } = canvas;
  const sigma = stroke.radius / 2;
  const support = Math.ceil(stroke.radius * 2);
  const target = stroke.tool === "mask-paint" ? canvas.mask : canvas.elevations;
  const smoothSource = stroke.tool === "smooth"
    ? Float64Array.from(canvas.elevations) : null;
  for (const [px, py] of stroke.path) {
    const cx = Math.round(px);
    const cy = Math.round(py);
    const flatTarget = stroke.tool === "flatten"
      ? neighborhoodMean(canvas.elevations, width, height, cx, cy, stroke.radius)
      : 0;
    for (let y = Math.max(0, cy - support); y <= Math.min(height - 1, cy + support); y++) {
      for (let x = Math.max(0, cx - support); x <= Math.min(width - 1, cx + support); x++) {
        const d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const w = Math.exp(-d2 / (2 * sigma * sigma));
        if (w < 1e-4) continue;
        const i = y * width + x;
        switch (stroke.tool) {
          case "raise":
            target[i] += stroke.strength * w;
            break;
          case "lower":
            target[i] -= stroke.strength * w;
            break;
          case "set-level":
            target[i] = lerp(target[i], stroke.level as number,
                             w * Math.min(1, stroke.strength));
            break;
          case "flatten":
            target[i] = lerp(target[i], flatTarget,
                             w * Math.min(1, stroke.strength));
            break;
          case "smooth":
            target[i] = lerp(target[i],
                             boxBlurAt(smoothSource as Float64Array, width, height, x, y),
                             w * Math.min(1, stroke.strength));
            break;
          case "mask-paint":
            target[i] = Math.min(1, Math.max(0,
              lerp(target[i], Math.min(1, Math.max(0, stroke.strength)), w)));
            break;
        }
      }
    }
  }
  return canvas;
}

/** Normalize elevations to [0, 1] for PNG upload; flat canvases map to 0.5. */
export function normalizeCanvas(canvas: Canvas): {
  values: Float64Array; minM: number; maxM: number;
} {
  let min = Infinity;
  let max = -Infinity;
  for (const v of canvas.elevations) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  const values = new Float64Array(canvas.elevations.length);
  if (max > min) {
    for (let i = 0; i < values.length; i++) {
      values[i] = (canvas.elevations[i] - min) / (max - min);
    }
  } else {
    values.fill(0.5);
  }
  return { values, minM: min, maxM: max };
}
