/** Metric formatting; every value shown comes from a service response. */

export function formatDsc(dsc: number): string {
  return dsc.toFixed(2);
}

export function formatVolumeCm3(v: number): string {
  return `${v.toFixed(2)} cm³`;
}

export function formatVoxels(n: number): string {
  return `${n} voxels`;
}

export function formatRuntime(ms: number): string {
  return ms >= 1000 ? `${(ms / 1000).toFixed(2)} s` : `${Math.round(ms)} ms`;
}
