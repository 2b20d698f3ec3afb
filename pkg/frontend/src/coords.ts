/**
 * Canvas <-> volume coordinate transforms.
 *
 * Slice images follow the service convention: for a slice along `axis`, the
 * image's horizontal pixels run along the first remaining axis (in x, y, z
 * order) and the vertical pixels along the second.  Pixel (i, j) shows the
 * voxel whose centre is at (i * spacing_u, j * spacing_v) on that slice
 * plane; the canvas scales the image by an integer-ish zoom factor.
 *
 * All persistent viewer state (seeds, polygons) lives in millimetres, never
 * in canvas pixels: converting through these functions is an exact affine
 * round trip, so zoom/axis changes cannot corrupt an initialization.
 */

export type Axis = "x" | "y" | "z";

export interface SliceGeometry {
  axis: Axis;
  dims: [number, number, number];
  spacingMm: [number, number, number];
  zoom: number;
}

export const AXIS_INDEX: Record<Axis, 0 | 1 | 2> = { x: 0, y: 1, z: 2 };

/** The two in-plane axes for a slice, in (x, y, z) order. */
export function inPlaneAxes(axis: Axis): [number, number] {
  const a = AXIS_INDEX[axis];
  const rest = [0, 1, 2].filter((k) => k !== a);
  return [rest[0], rest[1]];
}

/** Slice raster size in image pixels (width = first in-plane axis). */
export function sliceSize(g: SliceGeometry): { width: number; height: number } {
  const [u, v] = inPlaneAxes(g.axis);
  return { width: g.dims[u], height: g.dims[v] };
}

export function canvasSize(g: SliceGeometry): { width: number; height: number } {
  const s = sliceSize(g);
  return { width: s.width * g.zoom, height: s.height * g.zoom };
}

/** Continuous image coordinates of a canvas point (texel centres at integers). */
export function canvasToImage(g: SliceGeometry, cx: number, cy: number): { u: number; v: number } {
  return { u: cx / g.zoom - 0.5, v: cy / g.zoom - 0.5 };
}

export function imageToCanvas(g: SliceGeometry, u: number, v: number): { x: number; y: number } {
  return { x: (u + 0.5) * g.zoom, y: (v + 0.5) * g.zoom };
}

/** True when a canvas point lands on the slice raster. */
export function clickInBounds(g: SliceGeometry, cx: number, cy: number): boolean {
  const { u, v } = canvasToImage(g, cx, cy);
  const { width, height } = sliceSize(g);
  return u >= -0.5 && u < width - 0.5 && v >= -0.5 && v < height - 0.5;
}

/** Canvas click -> world millimetres on the current slice plane. */
export function canvasToMm(
  g: SliceGeometry,
  sliceIndex: number,
  cx: number,
  cy: number,
): [number, number, number] {
  const { u, v } = canvasToImage(g, cx, cy);
  const [ua, va] = inPlaneAxes(g.axis);
  const a = AXIS_INDEX[g.axis];
  const p: [number, number, number] = [0, 0, 0];
  p[ua] = u * g.spacingMm[ua];
  p[va] = v * g.spacingMm[va];
  p[a] = sliceIndex * g.spacingMm[a];
  return p;
}

/** World millimetres -> canvas pixels plus the (continuous) slice index. */
export function mmToCanvas(
  g: SliceGeometry,
  p: [number, number, number],
): { x: number; y: number; sliceIndex: number } {
  const [ua, va] = inPlaneAxes(g.axis);
  const a = AXIS_INDEX[g.axis];
  const { x, y } = imageToCanvas(g, p[ua] / g.spacingMm[ua], p[va] / g.spacingMm[va]);
  return { x, y, sliceIndex: p[a] / g.spacingMm[a] };
}

/** Millimetre point -> nearest voxel slice index along the given axis. */
export function mmToSliceIndex(axis: Axis, spacingMm: [number, number, number], p: [number, number, number]): number {
  const a = AXIS_INDEX[axis];
  return Math.round(p[a] / spacingMm[a]);
}

/** In-plane millimetre pair for outline polygons (axis order preserved). */
export function mmToInPlane(axis: Axis, p: [number, number, number]): [number, number] {
  const [ua, va] = inPlaneAxes(axis);
  return [p[ua], p[va]];
}
