/**
 * Geometry capture helpers: turning pointer trails into shared-schema JSON.
 */

import { LassoRegion, Point, PointRegion, Region, StrokeJson } from "./schema.js";

const MIN_STROKE_DRAG = 2; // px

function orient(a: Point, b: Point, c: Point): number {
  const value = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  if (Math.abs(value) < 1e-12) return 0;
  return value > 0 ? 1 : -1;
}

function properlyIntersect(p1: Point, p2: Point, p3: Point, p4: Point): boolean {
  const o1 = orient(p1, p2, p3);
  const o2 = orient(p1, p2, p4);
  const o3 = orient(p3, p4, p1);
  const o4 = orient(p3, p4, p2);
  return o1 !== o2 && o3 !== o4 && o1 !== 0 && o2 !== 0 && o3 !== 0 && o4 !== 0;
}

/** True when two non-adjacent edges of the closed polygon cross. */
export function selfIntersects(vertices: Point[]): boolean {
  const k = vertices.length;
  for (let i = 0; i < k; i++) {
    const a1 = vertices[i];
    const a2 = vertices[(i + 1) % k];
    for (let j = i + 1; j < k; j++) {
      if (j === i || (j + 1) % k === i || (i + 1) % k === j) continue;
      if (properlyIntersect(a1, a2, vertices[j], vertices[(j + 1) % k])) return true;
    }
  }
  return false;
}

/**
 * Close a pointer trail into a lasso polygon: drops a trailing point that
 * duplicates the first (the schema treats the vertex list as closed) and
 * thins collinear runs produced by slow drags.
 */
export function closeLasso(trail: Point[]): LassoRegion | null {
  const vertices: Point[] = [];
  for (const p of trail) {
    const last = vertices[vertices.length - 1];
    if (last && Math.hypot(p[0] - last[0], p[1] - last[1]) < 1.0) continue;
    vertices.push([p[0], p[1]]);
  }
  if (vertices.length >= 2) {
    const first = vertices[0];
    const last = vertices[vertices.length - 1];
    if (Math.hypot(first[0] - last[0], first[1] - last[1]) < 4.0) vertices.pop();
  }
  if (vertices.length < 3) return null;
  return { kind: "lasso-polygon", vertices };
}

export function pointRegion(at: Point): PointRegion {
  return { kind: "point", point: [at[0], at[1]] };
}

export function trailLength(trail: Point[]): number {
  let total = 0;
  for (let i = 1; i < trail.length; i++) {
    total += Math.hypot(trail[i][0] - trail[i - 1][0], trail[i][1] - trail[i - 1][1]);
  }
  return total;
}

/** Degenerate drags (under 2 px of travel) yield no stroke. */
export function strokeFromTrail(trail: Point[], radius: number): StrokeJson | null {
  if (trail.length < 2 || trailLength(trail) < MIN_STROKE_DRAG) return null;
  return { points: trail.map((p) => [p[0], p[1]] as Point), radius };
}

/** Centroid of a vertex list (used to preview point-paste placement). */
export function centroid(vertices: Point[]): Point {
  let sx = 0;
  let sy = 0;
  for (const [x, y] of vertices) {
    sx += x;
    sy += y;
  }
  return [sx / vertices.length, sy / vertices.length];
}

export function describeRegion(region: Region): string {
  switch (region.kind) {
    case "lasso-polygon":
      return `lasso (${region.vertices.length} vertices)`;
    case "circle":
      return `circle r=${region.radius}`;
    case "point":
      return `point (${region.point[0].toFixed(0)}, ${region.point[1].toFixed(0)})`;
  }
}
