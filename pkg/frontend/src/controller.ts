/** Queue state machine; every transition round-trips through the API.
 *
 * A decision POST is followed by a reload of the queue and progress, so
 * the console always displays server-confirmed state. Skipping only
 * moves the local focus; the candidate stays pending on the server.
 */

import type { ReviewApi } from "./api.js";
import type { Progress, QueueEntry, QueueFilter, Verdict } from "./types.js";

export class QueueController {
  entries: QueueEntry[] = [];
  index = 0;
  progress: Progress | null = null;
  filter: QueueFilter = {};

  constructor(
    private readonly api: ReviewApi,
    public reviewer: string,
  ) {}

  current(): QueueEntry | null {
    return this.entries[this.index] ?? null;
  }

  async load(filter?: QueueFilter): Promise<void> {
    if (filter !== undefined) this.filter = filter;
    const page = await this.api.listCandidates({ limit: 100, ...this.filter });
    this.entries = page.items;
    if (this.index >= this.entries.length) this.index = 0;
  }

  async refreshProgress(): Promise<void> {
    this.progress = await this.api.progress();
  }

  /** Decide the focused candidate, then re-sync queue and progress. */
  async decide(verdict: Verdict, note?: string): Promise<void> {
    const entry = this.current();
    if (entry === null) return;
    const position = this.index;
    await this.api.decide(entry.candidate.candidate_id, verdict, this.reviewer, note);
    await this.load();
    await this.refreshProgress();
    this.index = Math.min(position, Math.max(this.entries.length - 1, 0));
  }

  /** Move focus forward without deciding; wraps around. */
  skip(): void {
    if (this.entries.length === 0) return;
    this.index = (this.index + 1) % this.entries.length;
  }

  select(candidateId: string): void {
    const at = this.entries.findIndex(
      (e) => e.candidate.candidate_id === candidateId,
    );
    if (at >= 0) this.index = at;
  }

  /** Create a step-6 pairing; self-pairs are blocked before any request. */
  async createManual(left: string, right: string): Promise<void> {
    if (left === right) {
      throw new Error("cannot pair an IXP with itself");
    }
    await this.api.createManualCandidate(left, right);
    await this.load();
    await this.refreshProgress();
  }
}
