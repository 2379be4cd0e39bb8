/**
 * DOM-free application core: session/geometry/effect orchestration.
 *
 * Every canvas state the presenter sees is the byte-exact PNG body of a
 * service response; the core never synthesizes or edits pixels.  The DOM
 * layer (main.ts) only decodes those bytes onto the canvas and draws
 * geometry overlays on a separate layer.
 */

import { ApiError, JobState, QbrushApi } from "./api.js";
import { closeLasso, pointRegion, selfIntersects, strokeFromTrail } from "./geometry.js";
import { pollJob } from "./jobs.js";
import {
  ChemicalParams,
  Point,
  Region,
  SteerableParams,
  StrokeJson,
  ValidationError,
  validateChemicalParams,
  validateSteerableParams,
} from "./schema.js";
import { SweepController } from "./sweep.js";

export type Tool = "lasso-source" | "lasso-target" | "lasso-paste" | "paste-point" | "stroke";

export interface Presenter {
  /** Paint a canvas state; `png` is the untouched service response body. */
  present(png: Uint8Array): void;
  status(text: string): void;
  /** Training progress in [0,1], or null when idle. */
  progress(fraction: number | null): void;
  usedDistance(distance: number | null): void;
  warn(text: string): void;
  /** Geometry changed; the overlay should redraw. */
  geometryChanged(): void;
}

export interface AppTimers {
  pollIntervalMs?: number;
  sleep?: (ms: number) => Promise<void>;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

export class AppCore {
  sessionId: string | null = null;
  tool: Tool = "lasso-source";
  source: Region | null = null;
  target: Region | null = null;
  paste: Region | null = null;
  stroke: StrokeJson | null = null;
  trainId: string | null = null;
  busy = false;

  private trail: Point[] = [];
  private sweep: SweepController<Uint8Array> | null = null;

  constructor(
    private api: QbrushApi,
    private presenter: Presenter,
    private timers: AppTimers = {},
  ) {}

  // -- session -------------------------------------------------------------

  async openImage(png: Uint8Array | Blob): Promise<void> {
    this.sessionId = await this.api.createSession(png);
    this.trainId = null;
    this.sweep = null;
    this.source = this.target = this.paste = null;
    this.stroke = null;
    this.presenter.usedDistance(null);
    await this.refreshCanvas();
    this.presenter.status(`session ${this.sessionId} ready`);
    this.presenter.geometryChanged();
  }

  private requireSession(): string {
    if (!this.sessionId) throw new Error("load an image first");
    return this.sessionId;
  }

  private async refreshCanvas(): Promise<void> {
    this.presenter.present(await this.api.getCanvas(this.requireSession()));
  }

  // -- geometry capture ------------------------------------------------------

  setTool(tool: Tool): void {
    this.tool = tool;
    this.trail = [];
  }

  pointerDown(x: number, y: number): void {
    this.trail = [[x, y]];
  }

  pointerMove(x: number, y: number): void {
    if (this.trail.length === 0) return;
    this.trail.push([x, y]);
  }

  /** Current in-progress trail, for overlay rendering. */
  get inProgress(): Point[] {
    return this.trail;
  }

  pointerUp(strokeRadius: number): void {
    const trail = this.trail;
    this.trail = [];
    if (trail.length === 0) return;

    if (this.tool === "paste-point") {
      this.paste = pointRegion(trail[trail.length - 1]);
    } else if (this.tool === "stroke") {
      const stroke = strokeFromTrail(trail, strokeRadius);
      if (!stroke) {
        this.presenter.warn("stroke too short: drag at least 2 px");
        return;
      }
      this.stroke = stroke;
    } else {
      const region = closeLasso(trail);
      if (!region) {
        this.presenter.warn("lasso needs at least 3 distinct vertices");
        return;
      }
      if (selfIntersects(region.vertices)) {
        this.presenter.warn("lasso self-intersects; submission blocked");
        return;
      }
      if (this.tool === "lasso-source") this.source = region;
      else if (this.tool === "lasso-target") this.target = region;
      else this.paste = region;
    }
    this.presenter.geometryChanged();
  }

  // -- effects --------------------------------------------------------------

  async runSteerable(raw: Partial<SteerableParams>): Promise<JobState> {
    const session = this.requireSession();
    const params = validateSteerableParams(raw);
    if (!this.source || !this.target) {
      throw new ValidationError("region", "draw source and target regions first");
    }
    const paste = params.source_equals_paste ? null : this.paste;
    this.busy = true;
    this.presenter.status("training steering...");
    try {
      const jobId = await this.api.submitSteerable(session, this.source, this.target, paste, params);
      const job = await pollJob((id) => this.api.getJob(id), jobId, {
        intervalMs: this.timers.pollIntervalMs,
        sleep: this.timers.sleep,
        onProgress: (state) => this.presenter.progress(state.progress),
      });
      if (job.status === "failed") {
        this.presenter.warn(`training failed: ${job.error?.message ?? "unknown error"}`);
        return job;
      }
      this.trainId = String(job.result?.train_id ?? "");
      this.installSweep(session, this.trainId);
      await this.refreshCanvas();
      const fidelity = Number(job.result?.final_fidelity ?? NaN);
      this.presenter.status(`steering trained (fidelity ${fidelity.toFixed(4)}); slide t live`);
      return job;
    } finally {
      this.busy = false;
      this.presenter.progress(null);
    }
  }

  private installSweep(session: string, trainId: string): void {
    this.sweep = new SweepController<Uint8Array>({
      evaluate: (t) => this.api.evaluateSteerable(session, trainId, t),
      render: (png, t) => {
        this.presenter.present(png);
        this.presenter.status(`t = ${t.toFixed(3)}`);
      },
      onError: (err) => this.presenter.warn(`evaluate failed: ${describe(err)}`),
      setTimer: this.timers.setTimer,
      clearTimer: this.timers.clearTimer,
    });
  }

  /** Slider movement; only valid after a steerable training finished. */
  slideT(t: number): void {
    if (!this.sweep) {
      this.presenter.warn("train a steering first");
      return;
    }
    if (t < 0) return;
    this.sweep.request(t);
  }

  async runChemical(raw: Partial<ChemicalParams>): Promise<JobState> {
    const session = this.requireSession();
    const params = validateChemicalParams(raw);
    if (!this.stroke) throw new ValidationError("stroke", "draw a stroke first");
    this.busy = true;
    this.presenter.status("applying circuits along the stroke...");
    try {
      const jobId = await this.api.submitChemical(session, this.stroke, params);
      const job = await pollJob((id) => this.api.getJob(id), jobId, {
        intervalMs: this.timers.pollIntervalMs,
        sleep: this.timers.sleep,
        onProgress: (state) => this.presenter.progress(state.progress),
      });
      if (job.status === "failed") {
        this.presenter.warn(`effect failed: ${job.error?.message ?? "unknown error"}`);
        return job;
      }
      await this.refreshCanvas();
      const used = Number(job.result?.used_distance ?? NaN);
      this.presenter.usedDistance(used);
      this.presenter.status(`applied at grid distance ${used.toFixed(6)} A`);
      return job;
    } finally {
      this.busy = false;
      this.presenter.progress(null);
    }
  }

  async undo(): Promise<void> {
    const session = this.requireSession();
    try {
      await this.api.undo(session);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.presenter.warn("nothing to undo");
        return;
      }
      throw err;
    }
    await this.refreshCanvas();
    this.presenter.status("undone");
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
