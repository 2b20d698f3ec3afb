import { describe, expect, it } from "vitest";

import { formatDsc, formatRuntime, formatVolumeCm3, formatVoxels } from "../src/format.js";

describe("metric formatting", () => {
  it("shows DSC with two decimals", () => {
    expect(formatDsc(93.4321)).toBe("93.43");
    expect(formatDsc(100)).toBe("100.00");
    expect(formatDsc(89.5)).toBe("89.50");
  });

  it("formats volume, voxels, runtime", () => {
    expect(formatVolumeCm3(16.2604)).toBe("16.26 cm³");
    expect(formatVoxels(139670)).toBe("139670 voxels");
    expect(formatRuntime(950)).toBe("950 ms");
    expect(formatRuntime(4375)).toBe("4.38 s");
  });
});
