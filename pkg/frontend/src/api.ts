/** Typed client for the review service /v1 HTTP API. */

export interface MapListEntry {
  map_id: string;
  slide_id: string;
  cancer_type: string | null;
  n_cells: number;
  status: "OPEN" | "COMMITTED";
}

export interface PreviewRaster {
  n_rows: number;
  n_cols: number;
  factor: number;
  values: number[][];
}

export interface MapPayload {
  map_id: string;
  slide_id: string;
  cancer_type: string | null;
  patient_id: string | null;
  patch_px: number;
  n_cols: number;
  n_rows: number;
  n_cells: number;
  model_id: string;
  has_pixels: boolean;
  preview: PreviewRaster;
  probs?: number[][];
}

export interface ThresholdPreview {
  map_id: string;
  threshold: number;
  n_cells: number;
  positive_count: number;
  positive_fraction: number;
  binary_preview: PreviewRaster;
}

export interface BoundaryPatch {
  grid_x: number;
  grid_y: number;
  prob: number;
  thumbnail_png_base64: string;
}

export interface BoundaryGallery {
  map_id: string;
  threshold: number;
  positives: BoundaryPatch[];
  negatives: BoundaryPatch[];
}

export interface SessionState {
  session_id: string;
  map_id: string;
  current_threshold: number;
  status: "OPEN" | "COMMITTED";
  committed_manifest: string | null;
}

export interface CommitResult {
  session_id: string;
  status: "COMMITTED";
  manifest_path: string;
  n_records: number;
  threshold: number;
}

/** Error carrying the HTTP status and the service's own detail message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function parseDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return res.statusText || "request failed";
  }
}

export class ReviewApi {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, init);
    if (!res.ok) {
      throw new ApiError(res.status, await parseDetail(res));
    }
    return (await res.json()) as T;
  }

  async listMaps(): Promise<MapListEntry[]> {
    const body = await this.request<{ maps: MapListEntry[] }>("/v1/maps");
    return body.maps;
  }

  getMap(mapId: string, full = false): Promise<MapPayload> {
    const suffix = full ? "?full=true" : "";
    return this.request(`/v1/maps/${encodeURIComponent(mapId)}${suffix}`);
  }

  previewThreshold(
    mapId: string,
    t: number,
    signal?: AbortSignal,
  ): Promise<ThresholdPreview> {
    return this.request(
      `/v1/maps/${encodeURIComponent(mapId)}/preview?t=${t}`,
      { signal },
    );
  }

  samplePatches(mapId: string, t: number, n: number): Promise<BoundaryGallery> {
    return this.request(
      `/v1/maps/${encodeURIComponent(mapId)}/patches?t=${t}&n=${n}`,
    );
  }

  createSession(mapId: string): Promise<SessionState> {
    return this.request("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ map_id: mapId }),
    });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request(`/v1/sessions/${encodeURIComponent(sessionId)}`);
  }

  commit(
    sessionId: string,
    t: number,
    nSamples: number | "ALL",
    seed = 0,
  ): Promise<CommitResult> {
    return this.request(
      `/v1/sessions/${encodeURIComponent(sessionId)}/commit`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ t, n_samples: nSamples, seed }),
      },
    );
  }
}
