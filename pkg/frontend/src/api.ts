/** Typed client for the segmentation service. */

import type { Axis } from "./coords.js";
import type { OverlayPayload } from "./rle.js";
import type { Sidecar } from "./volume.js";

export interface SessionInfo {
  session_id: string;
  dims: [number, number, number];
  spacing_mm: [number, number, number];
  intensity_range: [number, number];
  has_reference: boolean;
  result_ids: string[];
}

export interface SegmentResponse {
  result_id: string;
  method: "balloon" | "graph";
  volume_cm3: number;
  voxel_count: number;
  runtime_ms: number;
  params: Record<string, unknown>;
  diagnostics: Record<string, unknown>;
  dsc?: number;
}

export interface MethodDefaults {
  balloon: Record<string, unknown>;
  graph: Record<string, unknown>;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public stage: string,
    public detail: string,
  ) {
    super(`${stage}: ${detail}`);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let stage = "http";
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    stage = body.stage ?? stage;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body: keep the status line
  }
  throw new ServiceError(response.status, stage, detail);
}

function b64encode(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

export class Client {
  constructor(public base: string = "") {}

  async getDefaults(): Promise<MethodDefaults> {
    return parseOrThrow(await fetch(`${this.base}/defaults`));
  }

  async createSessionCanonical(sidecar: Sidecar, raw: Uint8Array): Promise<SessionInfo> {
    const body = JSON.stringify({ sidecar, data_b64: b64encode(raw) });
    const response = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    return parseOrThrow(response);
  }

  async createSessionNifti(bytes: ArrayBuffer): Promise<SessionInfo> {
    const response = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: bytes,
    });
    return parseOrThrow(response);
  }

  async getSession(sessionId: string): Promise<SessionInfo> {
    return parseOrThrow(await fetch(`${this.base}/sessions/${sessionId}`));
  }

  async attachReference(sessionId: string, sidecar: Sidecar, raw: Uint8Array): Promise<void> {
    const body = JSON.stringify({ sidecar, data_b64: b64encode(raw) });
    await parseOrThrow(
      await fetch(`${this.base}/sessions/${sessionId}/reference`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body,
      }),
    );
  }

  sliceUrl(sessionId: string, axis: Axis, index: number, wc: number, ww: number): string {
    const params = new URLSearchParams({
      axis,
      index: String(index),
      wc: String(wc),
      ww: String(ww),
    });
    return `${this.base}/sessions/${sessionId}/slice?${params}`;
  }

  async segment(sessionId: string, request: object): Promise<SegmentResponse> {
    const response = await fetch(`${this.base}/sessions/${sessionId}/segment`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    return parseOrThrow(response);
  }

  async getOverlay(
    sessionId: string,
    resultId: string,
    axis: Axis,
    index: number,
  ): Promise<OverlayPayload> {
    const params = new URLSearchParams({ axis, index: String(index) });
    return parseOrThrow(
      await fetch(`${this.base}/sessions/${sessionId}/results/${resultId}/overlay?${params}`),
    );
  }
}
