/** DOM wiring for the studio page: canvas painting, live style sliders,
 * workflow panels (sketch / import / gallery / amplify / export). */

import { ApiClient, BundleInfo, GalleryEntry } from "./api.js";
import { BrushTool } from "./brush.js";
import { StudioController } from "./controller.js";
import { SliderScheduler } from "./debounce.js";
import { hillshade } from "./hillshade.js";

const api = new ApiClient("");
const controller = new StudioController(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("sketch-canvas");
const preview = el<HTMLCanvasElement>("preview-canvas");
const status = el<HTMLSpanElement>("status");
const toolSelect = el<HTMLSelectElement>("tool");
const radiusInput = el<HTMLInputElement>("radius");
const strengthInput = el<HTMLInputElement>("strength");
const levelInput = el<HTMLInputElement>("level");
const mixSlider = el<HTMLInputElement>("mix-slider");
const alphaSlider = el<HTMLInputElement>("alpha-slider");
const styleRefSelect = el<HTMLSelectElement>("style-ref");
const azimuthInput = el<HTMLInputElement>("azimuth");
const altitudeInput = el<HTMLInputElement>("altitude");
const jobProgress = el<HTMLProgressElement>("job-progress");

function toast(message: string, isError = false): void {
  status.textContent = message;
  status.className = isError ? "error" : "";
  if (isError) setTimeout(() => { status.textContent = ""; }, 6000);
}

function busy<A extends unknown[]>(fn: (...args: A) => Promise<unknown>) {
  return async (...args: A) => {
    try {
      await fn(...args);
    } catch (err) {
      toast(String(err), true);  // preview keeps the last good frame
    }
  };
}

// -- rendering -------------------------------------------------------------

function drawGray(target: HTMLCanvasElement, values: Float64Array,
                  width: number, height: number): void {
  target.width = width;
  target.height = height;
  const ctx = target.getContext("2d");
  if (!ctx) return;
  const image = ctx.createImageData(width, height);
  for (let i = 0; i < values.length; i++) {
    const v = Math.round(values[i] * 255);
    image.data[4 * i] = v;
    image.data[4 * i + 1] = v;
    image.data[4 * i + 2] = v;
    image.data[4 * i + 3] = 255;
  }
  ctx.putImageData(image, 0, 0);
}

function redrawSketch(): void {
  const { width, height } = controller.sketch;
  const shown = new Float64Array(width * height);
  let min = Infinity;
  let max = -Infinity;
  for (const v of controller.sketch.elevations) {
    min = Math.min(min, v);
    max = Math.max(max, v);
  }
  const span = max > min ? max - min : 1;
  for (let i = 0; i < shown.length; i++) {
    const base = (controller.sketch.elevations[i] - min) / span;
    const mask = controller.sketch.mask[i];
    shown[i] = mask > 0 ? base * (1 - 0.5 * mask) + 0.5 * mask : base;
  }
  drawGray(canvas, shown, width, height);
}

function redrawPreview(): void {
  const terrain = controller.terrain;
  if (!terrain) return;
  const shade = hillshade(
    { width: terrain.width, height: terrain.height, values: terrain.values },
    {
      azimuthDeg: Number(azimuthInput.value),
      altitudeDeg: Number(altitudeInput.value),
      metersPerUnit: terrain.maxM - terrain.minM || 1,
      cellSize: terrain.cellSizeM,
    });
  drawGray(preview, shade, terrain.width, terrain.height);
}

// -- painting ----------------------------------------------------------------

let painting = false;
let path: Array<[number, number]> = [];

function canvasCell(event: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
  return [Math.floor(x), Math.floor(y)];
}

canvas.addEventListener("pointerdown", (event) => {
  painting = true;
  path = [canvasCell(event)];
});
canvas.addEventListener("pointermove", (event) => {
  if (painting) path.push(canvasCell(event));
});
window.addEventListener("pointerup", () => {
  if (!painting) return;
  painting = false;
  if (path.length === 0) return;
  controller.stroke({
    tool: toolSelect.value as BrushTool,
    radius: Number(radiusInput.value),
    strength: Number(strengthInput.value),
    level: Number(levelInput.value),
    path,
  });
  redrawSketch();
});

// -- live style controls -------------------------------------------------------

const mixScheduler = new SliderScheduler<number>(
  busy(async (index: number, generation: number) => {
    await controller.mix(styleRefSelect.value, index);
    if (mixScheduler.isCurrent(generation)) redrawPreview();
  }) as (value: number, generation: number) => void);

const alphaScheduler = new SliderScheduler<number>(
  busy(async (alpha: number, generation: number) => {
    await controller.interpolate(styleRefSelect.value, alpha);
    if (alphaScheduler.isCurrent(generation)) redrawPreview();
  }) as (value: number, generation: number) => void);

mixSlider.addEventListener("input", () => {
  mixScheduler.update(Number(mixSlider.value));
});
alphaSlider.addEventListener("input", () => {
  alphaScheduler.update(Number(alphaSlider.value));
});

// -- panels ---------------------------------------------------------------------

async function refreshBundles(): Promise<BundleInfo[]> {
  const bundles = await api.bundles();
  const select = el<HTMLSelectElement>("bundle");
  select.innerHTML = "";
  for (const bundle of bundles) {
    const option = document.createElement("option");
    option.value = bundle.name;
    option.textContent =
      `${bundle.name} (${bundle.resolution}px, ${bundle.scale_tag})`;
    select.appendChild(option);
  }
  return bundles;
}

async function refreshGallery(): Promise<GalleryEntry[]> {
  const entries = await api.gallery();
  styleRefSelect.innerHTML = "";
  for (const entry of entries) {
    const option = document.createElement("option");
    option.value = entry.ref;
    option.textContent = entry.name;
    styleRefSelect.appendChild(option);
  }
  return entries;
}

el<HTMLButtonElement>("new-session").onclick = busy(async () => {
  const bundles = await refreshBundles();
  const chosen = el<HTMLSelectElement>("bundle").value || bundles[0]?.name;
  controller.resolution =
    bundles.find((b) => b.name === chosen)?.resolution ?? 64;
  const session = await controller.newFromSketch(chosen);
  history.replaceState(null, "", `#${session.id}`);
  redrawSketch();
  redrawPreview();
  toast(`session ${session.id}`);
});

el<HTMLButtonElement>("upload-sketch").onclick = busy(async () => {
  await controller.uploadSketch();
  await controller.encode();
  await controller.generate();
  redrawPreview();
  toast("sketch generated");
});

el<HTMLButtonElement>("re-encode").onclick = busy(async () => {
  await controller.encode();
  await controller.generate();
  redrawPreview();
  toast("re-encoded");
});

el<HTMLButtonElement>("undo").onclick = busy(async () => {
  await controller.undo();
  redrawPreview();
  toast("undone");
});

el<HTMLButtonElement>("save-style").onclick = busy(async () => {
  const name = el<HTMLInputElement>("style-name").value || "style";
  await controller.saveStyle(name);
  await refreshGallery();
  toast(`saved style ${name}`);
});

el<HTMLButtonElement>("region-blend").onclick = busy(async () => {
  await controller.regionBlend(styleRefSelect.value.replace("gallery:", "session:"));
  redrawPreview();
});

el<HTMLButtonElement>("amplify").onclick = busy(async () => {
  jobProgress.hidden = false;
  jobProgress.value = 0;
  const upscale = Number(el<HTMLInputElement>("upscale").value);
  const bundle = el<HTMLSelectElement>("bundle").value || undefined;
  await controller.amplify(upscale, bundle, (job) => {
    jobProgress.value = job.progress;
  });
  jobProgress.value = 1;
  jobProgress.hidden = true;
  redrawPreview();
  toast("amplified");
});

el<HTMLButtonElement>("export").onclick = busy(async () => {
  const snapshot = await controller.exportPng();
  const blob = new Blob([snapshot.png as BlobPart], { type: "image/png" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = `terrain-${controller.session?.id ?? "export"}.png`;
  link.click();
  URL.revokeObjectURL(link.href);
});

el<HTMLInputElement>("import-file").addEventListener("change", busy(async () => {
  const input = el<HTMLInputElement>("import-file");
  const file = input.files?.[0];
  if (!file) return;
  const bytes = new Uint8Array(await file.arrayBuffer());
  try {
    await controller.importTerrain(bytes, 0, 1000);
    redrawPreview();
    toast(`imported ${file.name}`);
  } catch (err) {
    el<HTMLSpanElement>("import-error").textContent = String(err);
  }
}));

for (const id of ["azimuth", "altitude"]) {
  el<HTMLInputElement>(id).addEventListener("input", redrawPreview);
}

// refresh-safe boot: #<session-id> in the URL re-attaches the page state
busy(async () => {
  await refreshBundles();
  await refreshGallery();
  const fromHash = location.hash.slice(1);
  if (fromHash) {
    await controller.attach(fromHash);
    redrawPreview();
  }
})();
