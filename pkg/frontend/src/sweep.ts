/**
 * Live t-slider controller.
 *
 * Contract: evaluate requests are debounced (150 ms), at most one request is
 * ever in flight, and responses are tagged with a sequence number so a slow
 * reply for an older t never overwrites a newer one (stale responses are
 * dropped, the latest requested t wins).
 */

export interface SweepDeps<T> {
  evaluate: (t: number) => Promise<T>;
  render: (result: T, t: number) => void;
  onError?: (err: unknown) => void;
  debounceMs?: number;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

export const DEFAULT_DEBOUNCE_MS = 150;

export class SweepController<T> {
  private debounceMs: number;
  private setTimer: (fn: () => void, ms: number) => unknown;
  private clearTimer: (handle: unknown) => void;

  private timer: unknown = null;
  private inFlight = false;
  private pending: number | null = null;
  private sequence = 0;
  private renderedSequence = 0;
  private inFlightCount = 0;
  maxObservedInFlight = 0;

  constructor(private deps: SweepDeps<T>) {
    this.debounceMs = deps.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.setTimer = deps.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = deps.clearTimer ?? ((handle) => clearTimeout(handle as number));
  }

  /** Slider moved: schedule an evaluation of t after the debounce window. */
  request(t: number): void {
    if (this.timer !== null) this.clearTimer(this.timer);
    this.timer = this.setTimer(() => {
      this.timer = null;
      this.enqueue(t);
    }, this.debounceMs);
  }

  /** Evaluate immediately (no debounce); same in-flight/staleness rules. */
  requestNow(t: number): void {
    if (this.timer !== null) {
      this.clearTimer(this.timer);
      this.timer = null;
    }
    this.enqueue(t);
  }

  private enqueue(t: number): void {
    if (this.inFlight) {
      this.pending = t; // latest wins; anything previously queued is dropped
      return;
    }
    this.start(t);
  }

  private start(t: number): void {
    const seq = ++this.sequence;
    this.inFlight = true;
    this.inFlightCount += 1;
    this.maxObservedInFlight = Math.max(this.maxObservedInFlight, this.inFlightCount);
    this.deps
      .evaluate(t)
      .then((result) => {
        if (seq > this.renderedSequence) {
          this.renderedSequence = seq;
          this.deps.render(result, t);
        }
      })
      .catch((err) => this.deps.onError?.(err))
      .finally(() => {
        this.inFlight = false;
        this.inFlightCount -= 1;
        if (this.pending !== null) {
          const next = this.pending;
          this.pending = null;
          this.start(next);
        }
      });
  }
}
