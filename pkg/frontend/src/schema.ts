/**
 * Shared JSON schemas for regions, strokes and effect parameters.
 *
 * These mirror the service's wire format exactly; validation messages match
 * the ones the service returns so users see identical text whether a value
 * is rejected client- or server-side.
 */

export type Point = [number, number];

export interface LassoRegion {
  kind: "lasso-polygon";
  vertices: Point[];
}

export interface CircleRegion {
  kind: "circle";
  center: Point;
  radius: number;
}

export interface PointRegion {
  kind: "point";
  point: Point;
}

export type Region = LassoRegion | CircleRegion | PointRegion;

export interface StrokeJson {
  points: Point[];
  radius: number;
}

export interface SteerableParams {
  t: number;
  timestep: number;
  controls: number;
  seed: number;
  max_iters?: number;
  source_equals_paste?: boolean;
  show_source_target?: boolean;
}

export interface ChemicalParams {
  bond_distance: number;
  repetitions: number;
  radius?: number;
}

export class ValidationError extends Error {
  constructor(public field: string, message: string) {
    super(`field '${field}': ${message}`);
  }
}

/** Parameter ranges enforced by the service; the panel enforces the same. */
export const LIMITS = {
  t: { min: 0 },
  timestep: { min: 1 },
  controls: [2, 3, 4] as const,
  repetitions: { min: 0, max: 100 },
  bond_distance: { min: 0.725, max: 2.5 },
  radius: { min: 1 },
};

function requireFinite(field: string, value: unknown): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new ValidationError(field, "expected a number");
  }
  return value;
}

function requireInt(field: string, value: unknown): number {
  const num = requireFinite(field, value);
  if (!Number.isInteger(num)) {
    throw new ValidationError(field, "expected an integer");
  }
  return num;
}

function requirePoints(field: string, value: unknown, minCount: number): Point[] {
  if (!Array.isArray(value) || value.length < minCount) {
    throw new ValidationError(field, `expected a list of at least ${minCount} [x, y] pairs`);
  }
  return value.map((entry) => {
    if (
      !Array.isArray(entry) ||
      entry.length !== 2 ||
      typeof entry[0] !== "number" ||
      typeof entry[1] !== "number"
    ) {
      throw new ValidationError(field, "entries must be [x, y] pairs");
    }
    return [entry[0], entry[1]] as Point;
  });
}

export function validateRegion(doc: unknown): Region {
  if (typeof doc !== "object" || doc === null) {
    throw new ValidationError("region", "expected an object");
  }
  const raw = doc as Record<string, unknown>;
  switch (raw.kind) {
    case "lasso-polygon":
      return { kind: "lasso-polygon", vertices: requirePoints("vertices", raw.vertices, 3) };
    case "circle": {
      const [center] = requirePoints("center", [raw.center], 1);
      const radius = requireFinite("radius", raw.radius);
      if (radius <= 0) throw new ValidationError("radius", "expected a positive number");
      return { kind: "circle", center, radius };
    }
    case "point": {
      const [point] = requirePoints("point", [raw.point], 1);
      return { kind: "point", point };
    }
    default:
      throw new ValidationError("kind", `unknown region kind '${String(raw.kind)}'`);
  }
}

export function validateStroke(doc: unknown): StrokeJson {
  if (typeof doc !== "object" || doc === null) {
    throw new ValidationError("stroke", "expected an object");
  }
  const raw = doc as Record<string, unknown>;
  const points = requirePoints("points", raw.points, 2);
  const radius = requireFinite("radius", raw.radius);
  if (radius < LIMITS.radius.min) throw new ValidationError("radius", "expected a number >= 1");
  return { points, radius };
}

export function validateSteerableParams(doc: Partial<SteerableParams>): SteerableParams {
  const t = requireFinite("t", doc.t);
  if (t < LIMITS.t.min) throw new ValidationError("t", "must be >= 0");
  const timestep = requireInt("timestep", doc.timestep ?? 25);
  if (timestep < LIMITS.timestep.min) throw new ValidationError("timestep", "must be >= 1");
  const controls = requireInt("controls", doc.controls ?? 2);
  if (!LIMITS.controls.includes(controls as 2 | 3 | 4)) {
    throw new ValidationError("controls", "must be 2, 3 or 4");
  }
  const seed = requireInt("seed", doc.seed ?? 0);
  const out: SteerableParams = { t, timestep, controls, seed };
  if (doc.max_iters !== undefined) {
    const maxIters = requireInt("max_iters", doc.max_iters);
    if (maxIters < 0) throw new ValidationError("max_iters", "expected a non-negative integer");
    out.max_iters = maxIters;
  }
  if (doc.source_equals_paste !== undefined) out.source_equals_paste = !!doc.source_equals_paste;
  if (doc.show_source_target !== undefined) out.show_source_target = !!doc.show_source_target;
  return out;
}

export function validateChemicalParams(doc: Partial<ChemicalParams>): ChemicalParams {
  const distance = requireFinite("bond_distance", doc.bond_distance);
  if (distance < LIMITS.bond_distance.min || distance > LIMITS.bond_distance.max) {
    throw new ValidationError("bond_distance", "must lie in [0.725, 2.5]");
  }
  const repetitions = requireInt("repetitions", doc.repetitions ?? 0);
  if (repetitions < LIMITS.repetitions.min || repetitions > LIMITS.repetitions.max) {
    throw new ValidationError("repetitions", "must lie in [0, 100]");
  }
  const out: ChemicalParams = { bond_distance: distance, repetitions };
  if (doc.radius !== undefined) {
    const radius = requireFinite("radius", doc.radius);
    if (radius < LIMITS.radius.min) throw new ValidationError("radius", "must be >= 1");
    out.radius = radius;
  }
  return out;
}
