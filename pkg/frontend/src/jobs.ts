/**
 * Job polling: ask the service for job state once a second until terminal.
 */

import { JobState } from "./api.js";

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onProgress?: (job: JobState) => void;
  sleep?: (ms: number) => Promise<void>;
}

export const POLL_INTERVAL_MS = 1000;

const realSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollJob(
  getJob: (id: string) => Promise<JobState>,
  jobId: string,
  options: PollOptions = {},
): Promise<JobState> {
  const interval = options.intervalMs ?? POLL_INTERVAL_MS;
  const deadline = Date.now() + (options.timeoutMs ?? 10 * 60 * 1000);
  const sleep = options.sleep ?? realSleep;
  for (;;) {
    const job = await getJob(jobId);
    options.onProgress?.(job);
    if (job.status === "done" || job.status === "failed") return job;
    if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
    await sleep(interval);
  }
}
