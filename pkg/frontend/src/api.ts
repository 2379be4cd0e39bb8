/**
 * Typed client for the qbrush HTTP API.  All canvas pixels originate from
 * the PNG bytes these calls return; the UI never computes pixels itself.
 */

import { ChemicalParams, Region, SteerableParams, StrokeJson } from "./schema.js";

export interface JobState {
  id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  progress: number;
  result: Record<string, unknown> | null;
  error: { code: string; message: string } | null;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let code = `http-${resp.status}`;
  let message = resp.statusText;
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, code, message);
}

export class QbrushApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await raiseForStatus(await this.fetchFn(this.url(path), init));
    return (await resp.json()) as T;
  }

  private async png(path: string, init?: RequestInit): Promise<Uint8Array> {
    const resp = await raiseForStatus(await this.fetchFn(this.url(path), init));
    return new Uint8Array(await resp.arrayBuffer());
  }

  async createSession(png: Uint8Array | Blob): Promise<string> {
    const body = png instanceof Blob ? png : new Blob([png as BlobPart], { type: "image/png" });
    const doc = await this.json<{ session_id: string }>("/sessions", {
      method: "POST",
      headers: { "content-type": "image/png" },
      body,
    });
    return doc.session_id;
  }

  getCanvas(sessionId: string): Promise<Uint8Array> {
    return this.png(`/sessions/${sessionId}/canvas`);
  }

  async submitSteerable(
    sessionId: string,
    source: Region,
    target: Region,
    paste: Region | null,
    params: SteerableParams,
  ): Promise<string> {
    const doc = await this.json<{ job_id: string }>(`/sessions/${sessionId}/effects/steerable`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ source, target, paste, params }),
    });
    return doc.job_id;
  }

  async submitChemical(
    sessionId: string,
    stroke: StrokeJson,
    params: ChemicalParams,
  ): Promise<string> {
    const doc = await this.json<{ job_id: string }>(`/sessions/${sessionId}/effects/chemical`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ stroke, params }),
    });
    return doc.job_id;
  }

  getJob(jobId: string): Promise<JobState> {
    return this.json<JobState>(`/jobs/${jobId}`);
  }

  evaluateSteerable(sessionId: string, trainId: string, t: number): Promise<Uint8Array> {
    return this.png(`/sessions/${sessionId}/effects/steerable/${trainId}/evaluate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ t }),
    });
  }

  async undo(sessionId: string): Promise<void> {
    await this.json<{ ok: boolean }>(`/sessions/${sessionId}/undo`, { method: "POST" });
  }

  familiesIndex(): Promise<{ distances: number[] }> {
    return this.json<{ distances: number[] }>("/families/index");
  }

  familyMetadata(distance: number): Promise<{ distance: number; m: number }> {
    return this.json<{ distance: number; m: number }>(
      `/families?distance=${encodeURIComponent(distance)}`,
    );
  }
}
