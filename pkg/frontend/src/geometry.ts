/** 2D polygon checks for outline drawing (mm-space points). */

export type Point2 = [number, number];

function orient(a: Point2, b: Point2, c: Point2): number {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

/** Proper crossing of open segments (shared endpoints do not count). */
export function segmentsCross(p1: Point2, p2: Point2, p3: Point2, p4: Point2): boolean {
  const d1 = orient(p3, p4, p1);
  const d2 = orient(p3, p4, p2);
  const d3 = orient(p1, p2, p3);
  const d4 = orient(p1, p2, p4);
  return ((d1 > 0) !== (d2 > 0)) && ((d3 > 0) !== (d4 > 0));
}

/** True when any two non-adjacent edges of the closed polygon cross. */
export function polygonSelfIntersects(points: Point2[]): boolean {
  const n = points.length;
  for (let i = 0; i < n; i++) {
    const a1 = points[i];
    const a2 = points[(i + 1) % n];
    for (let j = i + 1; j < n; j++) {
      if (j === i || (j + 1) % n === i || j === (i + 1) % n) continue;
      if (segmentsCross(a1, a2, points[j], points[(j + 1) % n])) return true;
    }
  }
  return false;
}

export function polygonArea(points: Point2[]): number {
  let twice = 0;
  for (let i = 0; i < points.length; i++) {
    const [x1, y1] = points[i];
    const [x2, y2] = points[(i + 1) % points.length];
    twice += x1 * y2 - x2 * y1;
  }
  return Math.abs(twice) / 2;
}

/** null when the polygon is a valid outline, else a user-facing reason. */
export function outlineProblem(points: Point2[]): string | null {
  if (points.length < 3) return "outline needs at least 3 points";
  if (polygonSelfIntersects(points)) return "outline is self-intersecting";
  if (polygonArea(points) < 1e-9) return "outline has zero area";
  return null;
}
