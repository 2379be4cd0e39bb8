import { describe, expect, it } from "vitest";

import { JobState } from "../src/api.js";
import { pollJob } from "../src/jobs.js";

function jobSequence(states: Partial<JobState>[]): (id: string) => Promise<JobState> {
  let call = 0;
  return async (id: string) => {
    const state = states[Math.min(call, states.length - 1)];
    call += 1;
    return {
      id,
      kind: "steerable-train",
      status: "queued",
      progress: 0,
      result: null,
      error: null,
      ...state,
    } as JobState;
  };
}

const instant = () => Promise.resolve();

describe("pollJob", () => {
  it("polls until done and reports progress", async () => {
    const seen: number[] = [];
    const job = await pollJob(
      jobSequence([
        { status: "queued", progress: 0 },
        { status: "running", progress: 0.4 },
        { status: "running", progress: 0.9 },
        { status: "done", progress: 1, result: { train_id: "abc" } },
      ]),
      "j1",
      { sleep: instant, onProgress: (state) => seen.push(state.progress) },
    );
    expect(job.status).toBe("done");
    expect(job.result?.train_id).toBe("abc");
    expect(seen).toEqual([0, 0.4, 0.9, 1]);
  });

  it("returns failed jobs instead of throwing", async () => {
    const job = await pollJob(
      jobSequence([
        { status: "running", progress: 0.2 },
        { status: "failed", error: { code: "X", message: "diverged" } },
      ]),
      "j2",
      { sleep: instant },
    );
    expect(job.status).toBe("failed");
    expect(job.error?.message).toBe("diverged");
  });

  it("times out on jobs that never finish", async () => {
    await expect(
      pollJob(jobSequence([{ status: "running" }]), "j3", {
        sleep: instant,
        timeoutMs: -1,
      }),
    ).rejects.toThrowError(/timed out/);
  });
});
