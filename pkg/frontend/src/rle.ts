/**
 * Overlay decoding and compositing.
 *
 * The service ships mask slices as run-length encoded rows:
 * {width, height, rows: [[start, len, start, len, ...], ...]} where rows are
 * indexed by the image's vertical axis and runs cover horizontal pixels.
 * Decoding produces exactly the mask bits; compositing only colors pixels,
 * so what is shown is the stored mask with no resampling.
 */

export interface OverlayPayload {
  width: number;
  height: number;
  rows: number[][];
}

export interface Rgba {
  r: number;
  g: number;
  b: number;
  a: number; // 0..255
}

/** RLE rows -> row-major bitmask of length width*height (index v*width+u). */
export function decodeOverlay(payload: OverlayPayload): Uint8Array {
  const { width, height, rows } = payload;
  if (rows.length !== height) {
    throw new Error(`overlay has ${rows.length} rows, expected ${height}`);
  }
  const bits = new Uint8Array(width * height);
  for (let v = 0; v < height; v++) {
    const runs = rows[v];
    for (let i = 0; i + 1 < runs.length; i += 2) {
      const start = runs[i];
      const len = runs[i + 1];
      if (start < 0 || start + len > width) {
        throw new Error(`run [${start}, ${len}] exceeds row width ${width}`);
      }
      bits.fill(1, v * width + start, v * width + start + len);
    }
  }
  return bits;
}

export function overlayPixelCount(bits: Uint8Array): number {
  let n = 0;
  for (let i = 0; i < bits.length; i++) n += bits[i];
  return n;
}

/** Paint a decoded mask into an RGBA buffer suitable for ImageData. */
export function maskToRgba(bits: Uint8Array, color: Rgba): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(bits.length * 4));
  for (let i = 0; i < bits.length; i++) {
    if (bits[i]) {
      out[4 * i] = color.r;
      out[4 * i + 1] = color.g;
      out[4 * i + 2] = color.b;
      out[4 * i + 3] = color.a;
    }
  }
  return out;
}
