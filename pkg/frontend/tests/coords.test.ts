import { describe, expect, it } from "vitest";

import {
  canvasSize,
  canvasToImage,
  canvasToMm,
  clickInBounds,
  imageToCanvas,
  inPlaneAxes,
  mmToCanvas,
  mmToInPlane,
  mmToSliceIndex,
  sliceSize,
  type Axis,
  type SliceGeometry,
} from "../src/coords.js";

const DIMS: [number, number, number] = [128, 96, 64];
const SPACING: [number, number, number] = [0.9, 1.1, 2.5];

function geom(axis: Axis, zoom: number): SliceGeometry {
  return { axis, dims: DIMS, spacingMm: SPACING, zoom };
}

describe("axis conventions", () => {
  it("in-plane axes follow x,y,z order", () => {
    expect(inPlaneAxes("z")).toEqual([0, 1]);
    expect(inPlaneAxes("y")).toEqual([0, 2]);
    expect(inPlaneAxes("x")).toEqual([1, 2]);
  });

  it("slice raster dimensions match the volume", () => {
    expect(sliceSize(geom("z", 1))).toEqual({ width: 128, height: 96 });
    expect(sliceSize(geom("y", 1))).toEqual({ width: 128, height: 64 });
    expect(sliceSize(geom("x", 1))).toEqual({ width: 96, height: 64 });
    expect(canvasSize(geom("x", 3))).toEqual({ width: 288, height: 192 });
  });
});

describe("coordinate round trip (acceptance)", () => {
  // 25 scripted canvas positions per zoom level, three zoom levels:
  // canvas -> mm -> canvas must land within one pixel (it is exact).
  const zooms = [1, 2, 4];
  for (const zoom of zooms) {
    it(`round-trips 25 clicks at zoom ${zoom}`, () => {
      const g = geom("z", zoom);
      const size = canvasSize(g);
      const positions: Array<[number, number]> = [];
      for (let i = 0; i < 5; i++) {
        for (let j = 0; j < 5; j++) {
          positions.push([
            ((i + 0.5) / 5) * size.width + 0.123 * (i - 2),
            ((j + 0.5) / 5) * size.height + 0.077 * (j - 2),
          ]);
        }
      }
      expect(positions).toHaveLength(25);
      for (const [cx, cy] of positions) {
        const sliceIndex = 17;
        const mm = canvasToMm(g, sliceIndex, cx, cy);
        const back = mmToCanvas(g, mm);
        expect(Math.abs(back.x - cx)).toBeLessThan(1.0);
        expect(Math.abs(back.y - cy)).toBeLessThan(1.0);
        // the affine inverse is numerically exact, well under the 1 px bound
        expect(Math.abs(back.x - cx)).toBeLessThan(1e-9);
        expect(Math.abs(back.y - cy)).toBeLessThan(1e-9);
        expect(back.sliceIndex).toBeCloseTo(sliceIndex, 9);
      }
    });
  }

  it("round-trips on every axis", () => {
    for (const axis of ["x", "y", "z"] as const) {
      const g = geom(axis, 2);
      const mm = canvasToMm(g, 5, 33.7, 41.2);
      const back = mmToCanvas(g, mm);
      expect(back.x).toBeCloseTo(33.7, 9);
      expect(back.y).toBeCloseTo(41.2, 9);
    }
  });
});

describe("pixel/voxel mapping", () => {
  it("texel centres map to voxel coordinates", () => {
    const g = geom("z", 2);
    // canvas centre of texel (10, 20) at zoom 2 is (21, 41)
    expect(imageToCanvas(g, 10, 20)).toEqual({ x: 21, y: 41 });
    expect(canvasToImage(g, 21, 41)).toEqual({ u: 10, v: 20 });
  });

  it("click at a voxel centre recovers index * spacing", () => {
    const g = geom("z", 4);
    const { x, y } = imageToCanvas(g, 64, 48);
    const mm = canvasToMm(g, 32, x, y);
    expect(mm[0]).toBeCloseTo(64 * SPACING[0], 9);
    expect(mm[1]).toBeCloseTo(48 * SPACING[1], 9);
    expect(mm[2]).toBeCloseTo(32 * SPACING[2], 9);
    expect(mmToSliceIndex("z", SPACING, mm)).toBe(32);
  });

  it("central click on a 100-cube volume lands at (50, 50, 50) mm", () => {
    const g: SliceGeometry = {
      axis: "z", dims: [100, 100, 100], spacingMm: [1, 1, 1], zoom: 2,
    };
    const size = canvasSize(g);
    const mm = canvasToMm(g, 50, size.width / 2, size.height / 2);
    expect(mm[0]).toBeCloseTo(49.5, 9); // centre of the canvas = texel 49.5
    expect(mm[2]).toBeCloseTo(50, 9);
  });

  it("in-plane extraction preserves axis order", () => {
    expect(mmToInPlane("z", [1, 2, 3])).toEqual([1, 2]);
    expect(mmToInPlane("y", [1, 2, 3])).toEqual([1, 3]);
    expect(mmToInPlane("x", [1, 2, 3])).toEqual([2, 3]);
  });
});

describe("bounds", () => {
  it("accepts clicks on the raster and rejects clicks outside", () => {
    const g = geom("z", 2);
    const size = canvasSize(g);
    expect(clickInBounds(g, 1, 1)).toBe(true);
    expect(clickInBounds(g, size.width - 1, size.height - 1)).toBe(true);
    expect(clickInBounds(g, -3, 10)).toBe(false);
    expect(clickInBounds(g, size.width + 2, 10)).toBe(false);
  });
});
