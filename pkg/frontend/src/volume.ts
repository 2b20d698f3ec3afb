/**
 * Client-side access to the raw payloads the user uploads (x-fastest voxel
 * order, little-endian).  Only used to render the *reference* mask overlay
 * locally; everything computed (volumes, DSC) comes from the service.
 */

import type { Axis } from "./coords.js";
import { AXIS_INDEX, inPlaneAxes } from "./coords.js";

export interface Sidecar {
  dims: [number, number, number];
  spacing_mm: [number, number, number];
  dtype: "int16" | "float32" | "uint8";
  data_file: string;
  byte_order: "little";
}

export function expectedByteLength(sidecar: Sidecar): number {
  const [nx, ny, nz] = sidecar.dims;
  const itemSize = { int16: 2, float32: 4, uint8: 1 }[sidecar.dtype];
  return nx * ny * nz * itemSize;
}

/** Voxel value lookup in an x-fastest flat buffer. */
export function voxelIndex(dims: [number, number, number], x: number, y: number, z: number): number {
  const [nx, ny] = dims;
  return x + nx * (y + ny * z);
}

/**
 * Extract a mask slice as a row-major bitmask matching the overlay layout
 * (index v*width + u, with u/v the in-plane axes in x,y,z order).
 */
export function maskSlice(
  dims: [number, number, number],
  bytes: Uint8Array,
  axis: Axis,
  index: number,
): { width: number; height: number; bits: Uint8Array } {
  const a = AXIS_INDEX[axis];
  if (index < 0 || index >= dims[a]) {
    throw new Error(`slice index ${index} out of bounds for axis ${axis}`);
  }
  const [ua, va] = inPlaneAxes(axis);
  const width = dims[ua];
  const height = dims[va];
  const bits = new Uint8Array(width * height);
  const coord: [number, number, number] = [0, 0, 0];
  coord[a] = index;
  for (let v = 0; v < height; v++) {
    coord[va] = v;
    for (let u = 0; u < width; u++) {
      coord[ua] = u;
      bits[v * width + u] = bytes[voxelIndex(dims, coord[0], coord[1], coord[2])] ? 1 : 0;
    }
  }
  return { width, height, bits };
}
