// Review queue state machine: optimistic advance with rollback on a failed ack.
// DOM-free so the whole labeling loop is testable headlessly.

import type { FilterMode, LabelValue, Progress, Transport, TripletView } from "./types.js";

export interface RetryState {
  item: TripletView;
  label: LabelValue;
  message: string;
}

export class ReviewQueue {
  private items: TripletView[] = [];
  private index = 0;
  private page = 0;
  private inFlight = false;

  progress: Progress | null = null;
  retryState: RetryState | null = null;
  filter: FilterMode = "unlabeled";
  exhausted = false;
  onChange: () => void = () => {};

  constructor(
    private readonly transport: Transport,
    readonly curator: string,
    private readonly pageSize = 16,
  ) {}

  async start(): Promise<void> {
    this.progress = await this.transport.fetchProgress();
    await this.refill();
    this.onChange();
  }

  current(): TripletView | null {
    if (this.retryState) return this.retryState.item;
    return this.items[this.index] ?? null;
  }

  position(): { done: number; total: number } {
    const p = this.progress;
    return p ? { done: p.high + p.low, total: p.total } : { done: 0, total: 0 };
  }

  async setFilter(filter: FilterMode): Promise<void> {
    if (this.retryState || this.inFlight) return;
    this.filter = filter;
    this.items = [];
    this.index = 0;
    this.page = 0;
    this.exhausted = false;
    await this.refill();
    this.onChange();
  }

  /** Submit a label for the current triplet; resolves false on a failed ack. */
  async label(value: LabelValue): Promise<boolean> {
    if (this.inFlight || this.retryState) return false;
    const item = this.items[this.index];
    if (!item) return false;
    const previous = item.label;
    item.label = value; // optimistic
    this.index += 1;
    this.inFlight = true;
    this.onChange();
    try {
      const ack = await this.transport.submitLabel(item.triplet_id, value, this.curator);
      this.progress = ack.progress;
      this.inFlight = false;
      await this.refill();
      this.onChange();
      return true;
    } catch (err) {
      // roll back: the label was not recorded, so do not move past the item
      item.label = previous;
      this.index -= 1;
      this.inFlight = false;
      this.retryState = { item, label: value, message: String(err) };
      this.onChange();
      return false;
    }
  }

  /** Re-attempt the failed submission without skipping the triplet. */
  async retry(): Promise<boolean> {
    const pending = this.retryState;
    if (!pending || this.inFlight) return false;
    this.retryState = null;
    return this.label(pending.label);
  }

  dismissRetry(): void {
    this.retryState = null;
    this.onChange();
  }

  async skip(): Promise<void> {
    if (this.inFlight || this.retryState) return;
    if (this.index < this.items.length) this.index += 1;
    await this.refill();
    this.onChange();
  }

  prev(): void {
    if (this.inFlight || this.retryState) return;
    if (this.index > 0) this.index -= 1;
    this.onChange();
  }

  /** Walk to a specific triplet already in the loaded window (revisit path). */
  jumpTo(tripletId: string): boolean {
    const at = this.items.findIndex((t) => t.triplet_id === tripletId);
    if (at < 0) return false;
    this.index = at;
    this.onChange();
    return true;
  }

  private async refill(): Promise<void> {
    if (this.index < this.items.length) return;
    // the unlabeled pool shifts as labels land, so its frontier is always page 0
    const page = this.filter === "unlabeled" ? 0 : this.page;
    const batch = await this.transport.fetchBatch(this.filter, page, this.pageSize);
    if (this.filter === "all") this.page += 1;
    if (batch.length === 0) {
      this.exhausted = true;
      return;
    }
    this.exhausted = false;
    if (this.filter === "unlabeled") {
      this.items = batch;
      this.index = 0;
    } else {
      this.items = this.items.concat(batch);
    }
  }
}

/**
 * Keyboard surface: H = high, L = low, S = skip, R = retry,
 * A = toggle filter, ArrowLeft = back. Returns true when the key did work.
 */
export async function handleKey(queue: ReviewQueue, key: string): Promise<boolean> {
  switch (key.toLowerCase()) {
    case "h":
      return queue.label("high");
    case "l":
      return queue.label("low");
    case "s":
      await queue.skip();
      return true;
    case "r":
      return queue.retry();
    case "a":
      await queue.setFilter(queue.filter === "unlabeled" ? "all" : "unlabeled");
      return true;
    case "arrowleft":
      queue.prev();
      return true;
    default:
      return false;
  }
}
