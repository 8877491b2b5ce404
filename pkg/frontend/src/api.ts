/** Typed fetch client for the authoring service's JSON API. */

export interface SessionInfo {
  id: string;
  bundle: string | null;
  width: number;
  height: number;
  cell_size_m: number;
  min_m: number;
  max_m: number;
  has_latent: boolean;
  undo_depth: number;
}

export interface BundleInfo {
  name: string;
  version: string;
  resolution: number;
  scale_tag: string;
}

export interface JobInfo {
  id: string;
  kind: string;
  status: "pending" | "running" | "done" | "failed";
  progress: number;
  error: string | null;
  result: Record<string, unknown> | null;
}

export interface GalleryEntry {
  name: string;
  ref: string;
  layers: number;
  dim: number;
  bundle_version: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

function toBase64(bytes: Uint8Array): string {
  if (typeof Buffer !== "undefined") return Buffer.from(bytes).toString("base64");
  let binary = "";
  bytes.forEach((b) => { binary += String.fromCharCode(b); });
  return btoa(binary);
}

export class ApiClient {
  constructor(public readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = await response.json();
        detail = JSON.stringify(parsed.detail ?? parsed);
      } catch { /* keep statusText */ }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private async bytes(path: string): Promise<{ bytes: Uint8Array; headers: Headers }> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) throw new ApiError(response.status, response.statusText);
    return { bytes: new Uint8Array(await response.arrayBuffer()), headers: response.headers };
  }

  createSession(options: {
    bundle?: string; resolution?: number; png?: Uint8Array;
    minM?: number; maxM?: number; cellSizeM?: number;
  } = {}): Promise<SessionInfo> {
    return this.request("POST", "/sessions", {
      bundle: options.bundle ?? null,
      resolution: options.resolution ?? null,
      png_base64: options.png ? toBase64(options.png) : null,
      min_m: options.minM ?? 0.0,
      max_m: options.maxM ?? 1000.0,
      cell_size_m: options.cellSizeM ?? 30.0,
    });
  }

  getSession(id: string): Promise<SessionInfo> {
    return this.request("GET", `/sessions/${id}`);
  }

  uploadTerrain(id: string, png: Uint8Array, minM: number, maxM: number,
                cellSizeM = 30.0): Promise<SessionInfo> {
    return this.request("POST", `/sessions/${id}/terrain`, {
      png_base64: toBase64(png), min_m: minM, max_m: maxM,
      cell_size_m: cellSizeM,
    });
  }

  encode(id: string): Promise<SessionInfo> {
    return this.request("POST", `/sessions/${id}/encode`, {});
  }

  generate(id: string, noiseSeed = 0): Promise<SessionInfo> {
    return this.request("POST", `/sessions/${id}/generate`,
                        { noise_seed: noiseSeed });
  }

  mix(id: string, otherRef: string, crossoverIndex: number,
      noiseSeed = 0): Promise<SessionInfo> {
    return this.request("POST", `/sessions/${id}/mix`, {
      other_latent_ref: otherRef, crossover_index: crossoverIndex,
      noise_seed: noiseSeed,
    });
  }

  interpolate(id: string, otherRef: string, alpha: number,
              noiseSeed = 0): Promise<SessionInfo> {
    return this.request("POST", `/sessions/${id}/interpolate`, {
      other_latent_ref: otherRef, alpha, noise_seed: noiseSeed,
    });
  }

  regionBlend(id: string, maskPng: Uint8Array,
              otherTerrainRef: string): Promise<SessionInfo> {
    return this.request("POST", `/sessions/${id}/region_blend`, {
      mask_png_base64: toBase64(maskPng), other_terrain_ref: otherTerrainRef,
    });
  }

  amplify(id: string, upscale: number, bundle?: string,
          noiseSeed = 0): Promise<{ job_id: string; status_url: string }> {
    return this.request("POST", `/sessions/${id}/amplify`, {
      bundle: bundle ?? null, upscale, noise_seed: noiseSeed,
    });
  }

  undo(id: string): Promise<SessionInfo> {
    return this.request("POST", `/sessions/${id}/undo`, {});
  }

  job(jobId: string): Promise<JobInfo> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  bundles(): Promise<BundleInfo[]> {
    return this.request("GET", "/bundles");
  }

  saveLatent(id: string, name: string): Promise<{ name: string; ref: string }> {
    return this.request("POST", `/sessions/${id}/latents`, { name });
  }

  gallery(): Promise<GalleryEntry[]> {
    return this.request("GET", "/latents");
  }

  /** The authoritative 16-bit terrain PNG plus its sidecar headers. */
  async terrainPng(id: string): Promise<{
    bytes: Uint8Array; minM: number; maxM: number; cellSizeM: number;
  }> {
    const { bytes, headers } = await this.bytes(`/sessions/${id}/terrain.png`);
    return {
      bytes,
      minM: Number(headers.get("X-Min-M") ?? 0),
      maxM: Number(headers.get("X-Max-M") ?? 1000),
      cellSizeM: Number(headers.get("X-Cell-Size-M") ?? 30),
    };
  }

  async hillshadePng(id: string, azimuth = 315, altitude = 45): Promise<Uint8Array> {
    const { bytes } = await this.bytes(
      `/sessions/${id}/hillshade.png?azimuth=${azimuth}&altitude=${altitude}`);
    return bytes;
  }
}

export function pollJob(api: ApiClient, jobId: string,
                        onProgress?: (job: JobInfo) => void,
                        intervalMs = 150, timeoutMs = 300_000): Promise<JobInfo> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const tick = async () => {
      try {
        const job = await api.job(jobId);
        onProgress?.(job);
        if (job.status === "done") return resolve(job);
        if (job.status === "failed") {
          return reject(new Error(job.error ?? "job failed"));
        }
        if (Date.now() > deadline) return reject(new Error("job timed out"));
        setTimeout(tick, intervalMs);
      } catch (err) {
        reject(err);
      }
    };
    tick();
  });
}
