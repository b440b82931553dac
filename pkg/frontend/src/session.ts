/** Rater session state machine: one item at a time, forced-choice per slot.
 *
 * The session never sees model identities; scores are keyed to slot letters
 * and resolved server-side.  Entered scores survive network failures: the
 * per-slot submissions that did not reach the server stay queued and are
 * resent on retry.
 */

import { ApiClient, ApiError, NextItem, ScoreRequest } from "./api.js";

export type Phase = "idle" | "loading" | "scoring" | "submitting" | "done" | "error";

export const VALID_SCORES = [0, 1, 2] as const;

export class RaterSession {
  phase: Phase = "idle";
  raterId = "";
  item: NextItem | null = null;
  selections = new Map<string, number>();
  pending: ScoreRequest[] = [];
  errorMessage = "";
  conflictMessage = "";

  private listeners: Array<() => void> = [];

  constructor(private readonly client: ApiClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get progressLabel(): string {
    if (!this.item) return "";
    const { scored_items, total_items } = this.item.progress;
    return `${scored_items} of ${total_items} items scored`;
  }

  async start(raterId: string): Promise<void> {
    const trimmed = raterId.trim();
    if (!trimmed) throw new Error("rater id must be non-empty");
    this.raterId = trimmed;
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    this.phase = "loading";
    this.errorMessage = "";
    this.notify();
    try {
      const item = await this.client.next(this.raterId);
      this.item = item;
      this.selections = new Map(item.scored.map((s) => [s.slot, s.score]));
      this.pending = [];
      this.conflictMessage = "";
      this.phase = item.done ? "done" : "scoring";
    } catch (error) {
      this.errorMessage = describeError(error);
      this.phase = "error";
    }
    this.notify();
  }

  select(slot: string, score: number): void {
    if (!VALID_SCORES.includes(score as 0 | 1 | 2)) {
      throw new RangeError(`score must be 0, 1, or 2, got ${score}`);
    }
    if (this.phase !== "scoring") return;
    this.selections.set(slot, score);
    this.notify();
  }

  get canSubmit(): boolean {
    if (this.phase !== "scoring" || !this.item || this.item.done) return false;
    return this.item.candidates.every((c) => this.selections.has(c.slot));
  }

  /** POST one score per slot; on success advance to the next item. */
  async submit(): Promise<void> {
    if (!this.canSubmit || !this.item?.item_id) return;
    const alreadyStored = new Set(this.item.scored.map((s) => s.slot));
    this.pending = this.item.candidates
      .filter((c) => !alreadyStored.has(c.slot))
      .map((c) => ({
        item_id: this.item!.item_id!,
        rater_id: this.raterId,
        slot: c.slot,
        score: this.selections.get(c.slot)!,
      }));
    await this.drain();
  }

  /** Resend whatever is still queued after a failure. */
  async retry(): Promise<void> {
    if (this.pending.length) {
      await this.drain();
    } else {
      await this.loadNext();
    }
  }

  private async drain(): Promise<void> {
    this.phase = "submitting";
    this.errorMessage = "";
    this.notify();
    while (this.pending.length) {
      const head = this.pending[0]!;
      try {
        await this.client.score(head);
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          // server already holds different values: show the stored ones
          await this.loadNext();
          this.conflictMessage =
            "This item was already scored; showing the stored values.";
          this.notify();
          return;
        }
        if (error instanceof ApiError && error.status === 400) {
          this.errorMessage = `rejected: ${error.message}`;
          this.pending.shift();
          this.phase = "scoring";
          this.notify();
          return;
        }
        // transient network failure: keep the queue, surface a retry banner
        this.errorMessage = describeError(error);
        this.phase = "error";
        this.notify();
        return;
      }
      this.pending.shift();
    }
    await this.loadNext();
  }
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) return `server error ${error.status}: ${error.message}`;
  if (error instanceof Error) return `network error: ${error.message}`;
  return "network error";
}
