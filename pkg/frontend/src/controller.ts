/**
 * Framework-free studio controller: the state machine behind the page.
 *
 * All terrain math authority lives server-side; the controller keeps only
 * the sketch canvas, the active session id, and preview bytes, so the page
 * is reconstructable from a session id alone. The DOM layer (main.ts) and
 * the integration tests drive this same object.
 */

import { ApiClient, JobInfo, SessionInfo, pollJob } from "./api.js";
import { BrushStroke, Canvas, applyStroke, makeCanvas, normalizeCanvas } from "./brush.js";
import { decodePng16, encodePng16 } from "./png16.js";

export interface TerrainSnapshot {
  png: Uint8Array;
  minM: number;
  maxM: number;
  cellSizeM: number;
  width: number;
  height: number;
  values: Float64Array;
}

export class StudioController {
  session: SessionInfo | null = null;
  sketch: Canvas;
  terrain: TerrainSnapshot | null = null;
  lastError: string | null = null;

  constructor(public readonly api: ApiClient, public resolution = 64) {
    this.sketch = makeCanvas(resolution, resolution);
  }

  private requireSession(): SessionInfo {
    if (!this.session) throw new Error("no active session");
    return this.session;
  }

  /** Refresh the local snapshot from the authoritative server terrain. */
  async refreshTerrain(): Promise<TerrainSnapshot> {
    const session = this.requireSession();
    const { bytes, minM, maxM, cellSizeM } = await this.api.terrainPng(session.id);
    const image = await decodePng16(bytes);
    this.terrain = {
      png: bytes, minM, maxM, cellSizeM,
      width: image.width, height: image.height, values: image.values,
    };
    this.session = await this.api.getSession(session.id);
    return this.terrain;
  }

  /** Restore a page from a session id alone (refresh-safe). */
  async attach(sessionId: string): Promise<void> {
    this.session = await this.api.getSession(sessionId);
    await this.refreshTerrain();
  }

  async newFromSketch(bundle?: string): Promise<SessionInfo> {
    this.session = await this.api.createSession(
      { bundle, resolution: this.resolution });
    this.sketch = makeCanvas(this.resolution, this.resolution);
    await this.refreshTerrain();
    return this.session;
  }

  stroke(stroke: BrushStroke): Canvas {
    return applyStroke(this.sketch, stroke);
  }

  /** Push the sketch to the server as the session terrain. */
  async uploadSketch(cellSizeM = 30.0): Promise<SessionInfo> {
    const session = this.requireSession();
    const { values, minM, maxM } = normalizeCanvas(this.sketch);
    const png = await encodePng16({
      width: this.sketch.width, height: this.sketch.height, values,
    });
    this.session = await this.api.uploadTerrain(session.id, png, minM, maxM,
                                                cellSizeM);
    await this.refreshTerrain();
    return this.session;
  }

  async importTerrain(png: Uint8Array, minM: number, maxM: number,
                      cellSizeM = 30.0): Promise<SessionInfo> {
    await decodePng16(png); // validate before shipping; raises on bad files
    const session = this.requireSession();
    this.session = await this.api.uploadTerrain(session.id, png, minM, maxM,
                                                cellSizeM);
    await this.refreshTerrain();
    return this.session;
  }

  async encode(): Promise<SessionInfo> {
    const session = this.requireSession();
    this.session = await this.api.encode(session.id);
    return this.session;
  }

  async generate(noiseSeed = 0): Promise<TerrainSnapshot> {
    const session = this.requireSession();
    this.session = await this.api.generate(session.id, noiseSeed);
    return this.refreshTerrain();
  }

  async mix(otherRef: string, crossoverIndex: number,
            noiseSeed = 0): Promise<TerrainSnapshot> {
    const session = this.requireSession();
    this.session = await this.api.mix(session.id, otherRef, crossoverIndex,
                                      noiseSeed);
    return this.refreshTerrain();
  }

  async interpolate(otherRef: string, alpha: number,
                    noiseSeed = 0): Promise<TerrainSnapshot> {
    const session = this.requireSession();
    this.session = await this.api.interpolate(session.id, otherRef, alpha,
                                              noiseSeed);
    return this.refreshTerrain();
  }

  /** Ship the painted mask layer and blend against another session. */
  async regionBlend(otherTerrainRef: string): Promise<TerrainSnapshot> {
    const session = this.requireSession();
    const png = await encodePng16({
      width: this.sketch.width, height: this.sketch.height,
      values: this.sketch.mask,
    });
    this.session = await this.api.regionBlend(session.id, png, otherTerrainRef);
    return this.refreshTerrain();
  }

  async amplify(upscale: number, bundle?: string,
                onProgress?: (job: JobInfo) => void): Promise<TerrainSnapshot> {
    const session = this.requireSession();
    const { job_id } = await this.api.amplify(session.id, upscale, bundle);
    await pollJob(this.api, job_id, onProgress);
    return this.refreshTerrain();
  }

  async undo(): Promise<TerrainSnapshot> {
    const session = this.requireSession();
    this.session = await this.api.undo(session.id);
    return this.refreshTerrain();
  }

  async saveStyle(name: string): Promise<string> {
    const session = this.requireSession();
    const saved = await this.api.saveLatent(session.id, name);
    return saved.ref;
  }

  /**
   * Export: the bytes are fetched from the server verbatim, never
   * re-encoded client-side, so the download always byte-equals the stored
   * session terrain.
   */
  async exportPng(): Promise<TerrainSnapshot> {
    return this.refreshTerrain();
  }
}
