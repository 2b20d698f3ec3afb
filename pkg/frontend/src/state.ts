/**
 * Viewer state.  Initialization coordinates (seed, outline vertices) are
 * held in volume millimetres only; canvas pixels are derived per paint.
 */

import type { Axis } from "./coords.js";
import type { SegmentResponse, SessionInfo } from "./api.js";
import type { Point2 } from "./geometry.js";

export type Method = "balloon" | "graph";

export interface SeedMarker {
  mm: [number, number, number];
}

export interface PendingOutline {
  axis: Axis;
  index: number;
  pointsMm: Point2[]; // in-plane mm pairs
  closed: boolean;
}

export interface ResultEntry {
  id: string;
  method: Method;
  color: { r: number; g: number; b: number };
  visible: boolean;
  response: SegmentResponse;
}

const BALLOON_COLORS = [
  { r: 41, g: 98, b: 255 },
  { r: 0, g: 145, b: 234 },
  { r: 48, g: 79, b: 254 },
];
const GRAPH_COLORS = [
  { r: 213, g: 0, b: 0 },
  { r: 255, g: 109, b: 0 },
  { r: 197, g: 17, b: 98 },
];
export const REFERENCE_COLOR = { r: 0, g: 200, b: 83 };

export class ViewerState {
  session: SessionInfo | null = null;
  axis: Axis = "z";
  index = 0;
  windowCenter = 128;
  windowWidth = 256;
  zoom = 2;
  method: Method = "graph";
  seed: SeedMarker | null = null;
  outline: PendingOutline | null = null;
  results: ResultEntry[] = [];
  referenceVisible = true;
  overlayOpacity = 0.45;
  running = false;

  private counts: Record<Method, number> = { balloon: 0, graph: 0 };

  attachSession(info: SessionInfo): void {
    this.session = info;
    this.axis = "z";
    this.index = Math.floor(info.dims[2] / 2);
    const [lo, hi] = info.intensity_range;
    this.windowCenter = (lo + hi) / 2;
    this.windowWidth = Math.max(hi - lo, 1e-9);
    this.seed = null;
    this.outline = null;
    this.results = [];
    this.counts = { balloon: 0, graph: 0 };
  }

  /** Single-seed model: a new click replaces the previous marker. */
  placeSeed(mm: [number, number, number]): void {
    this.seed = { mm };
  }

  startOrExtendOutline(pointMm: Point2): void {
    if (!this.outline || this.outline.closed || this.outline.axis !== this.axis
        || this.outline.index !== this.index) {
      this.outline = { axis: this.axis, index: this.index, pointsMm: [], closed: false };
    }
    this.outline.pointsMm.push(pointMm);
  }

  addResult(response: SegmentResponse): ResultEntry {
    const palette = response.method === "balloon" ? BALLOON_COLORS : GRAPH_COLORS;
    const color = palette[this.counts[response.method] % palette.length];
    this.counts[response.method] += 1;
    const entry: ResultEntry = {
      id: response.result_id,
      method: response.method,
      color,
      visible: true,
      response,
    };
    this.results.push(entry);
    return entry;
  }

  maxIndex(): number {
    if (!this.session) return 0;
    return this.session.dims[{ x: 0, y: 1, z: 2 }[this.axis]] - 1;
  }
}
