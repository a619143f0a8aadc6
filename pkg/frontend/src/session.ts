// Triage session state: the paged pending queue, decision submission with
// idempotency keys, optimistic updates, and a retry queue for transport
// failures. All state round-trips through the service API: a fresh session
// against the same server reproduces the same view.

import { ApiClient, ConflictError, TransportFailure } from './api.js';
import type {
  DecisionAction,
  DecisionResult,
  Progress,
  QueueFilters,
  RelevanceType,
  ReviewItem,
} from './types.js';

export interface PendingDecision {
  itemId: string;
  action: DecisionAction;
  type?: RelevanceType;
  key: string;
}

export interface SessionOptions {
  reviewer: string;
  pageSize?: number;
  filters?: QueueFilters;
  keyFactory?: () => string;
}

function defaultKeyFactory(): string {
  const cryptoObj = (globalThis as { crypto?: Crypto }).crypto;
  if (cryptoObj?.randomUUID) return cryptoObj.randomUUID();
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

export class TriageSession {
  items: ReviewItem[] = [];
  page = 1;
  pageSize: number;
  total = 0;
  progress: Progress = { pending: 0, decided: 0, per_level: {} };
  selected = 0;
  revealMetadata = false;
  retryQueue: PendingDecision[] = [];
  lastError: string | null = null;

  private readonly reviewer: string;
  private readonly filters: QueueFilters;
  private readonly keyFactory: () => string;
  // one idempotency key per item: double submits replay the same request
  private readonly keysByItem = new Map<string, string>();
  private readonly inFlight = new Set<string>();

  constructor(
    private readonly api: ApiClient,
    options: SessionOptions,
  ) {
    this.reviewer = options.reviewer;
    this.pageSize = options.pageSize ?? 10;
    this.filters = options.filters ?? {};
    this.keyFactory = options.keyFactory ?? defaultKeyFactory;
  }

  async load(page = this.page): Promise<void> {
    const result = await this.api.listQueue(page, this.pageSize, this.filters);
    // server order is preserved verbatim; pagination never reorders
    this.items = result.items;
    this.page = result.page;
    this.total = result.total;
    this.progress = result.progress;
    this.selected = Math.min(this.selected, Math.max(0, this.items.length - 1));
  }

  get pages(): number {
    return Math.max(1, Math.ceil(this.total / this.pageSize));
  }

  current(): ReviewItem | undefined {
    return this.items[this.selected];
  }

  /** True while a decision request is on the wire; controls disable then. */
  get busy(): boolean {
    return this.inFlight.size > 0;
  }

  select(index: number): void {
    if (index >= 0 && index < this.items.length) this.selected = index;
  }

  keyFor(itemId: string): string {
    let key = this.keysByItem.get(itemId);
    if (key === undefined) {
      key = this.keyFactory();
      this.keysByItem.set(itemId, key);
    }
    return key;
  }

  /** Submit a decision: optimistic removal, server confirmation,
   * conflict-safe refresh, and retry queueing on transport failure.
   *
   * `itemId` should be the id of the item the control was rendered for, so a
   * double click targets the same item twice (and is deduplicated) instead of
   * hitting whatever became current after the optimistic update. Returns the
   * server result when delivered now, null otherwise. */
  async decide(
    action: DecisionAction,
    type?: RelevanceType,
    itemId?: string,
  ): Promise<DecisionResult | null> {
    const target = itemId ?? this.current()?.item_id;
    if (target === undefined) return null;
    return this.deliver({ itemId: target, action, type, key: this.keyFor(target) });
  }

  private async deliver(decision: PendingDecision): Promise<DecisionResult | null> {
    if (this.inFlight.has(decision.key)) return null; // double click, already going out
    this.inFlight.add(decision.key);
    const optimisticIndex = this.items.findIndex((i) => i.item_id === decision.itemId);
    const removed = optimisticIndex >= 0 ? this.items[optimisticIndex] : undefined;
    if (removed) {
      this.items.splice(optimisticIndex, 1);
      this.progress.pending = Math.max(0, this.progress.pending - 1);
      this.progress.decided += 1;
      this.selected = Math.min(this.selected, Math.max(0, this.items.length - 1));
    }
    try {
      const result = await this.api.submitDecision(decision.itemId, {
        action: decision.action,
        type: decision.type,
        reviewer: this.reviewer,
        idempotency_key: decision.key,
      });
      this.lastError = null;
      await this.load();
      return result;
    } catch (err) {
      if (err instanceof ConflictError) {
        // somebody else decided it: reload server truth, drop nothing else
        await this.load();
        this.lastError = 'item was already decided elsewhere; view refreshed';
        return null;
      }
      if (err instanceof TransportFailure) {
        // deliver later with the same idempotency key (exactly-once on the server)
        if (!this.retryQueue.some((d) => d.key === decision.key)) {
          this.retryQueue.push(decision);
        }
        this.lastError = `offline: ${this.retryQueue.length} decision(s) queued for retry`;
        return null;
      }
      // validation-style error: roll the optimistic update back
      if (removed) {
        this.items.splice(Math.min(optimisticIndex, this.items.length), 0, removed);
        this.progress.pending += 1;
        this.progress.decided = Math.max(0, this.progress.decided - 1);
      }
      this.lastError = String(err);
      throw err;
    } finally {
      this.inFlight.delete(decision.key);
    }
  }

  /** Re-deliver queued decisions (call on reconnect). Keys are reused, so a
   * decision that did reach the server earlier is not recorded twice; a
   * decision the server rejects outright is dropped with the error shown,
   * never blocking the rest of the queue. */
  async flushRetries(): Promise<number> {
    const queued = [...this.retryQueue];
    this.retryQueue = [];
    let delivered = 0;
    const rejections: string[] = [];
    for (const decision of queued) {
      try {
        const result = await this.deliver(decision);
        if (result !== null) delivered += 1;
      } catch (err) {
        rejections.push(`queued decision for ${decision.itemId} rejected: ${String(err)}`);
      }
    }
    if (rejections.length > 0) {
      this.lastError = rejections.join('; ');
    }
    return delivered;
  }

  toggleMetadata(): void {
    this.revealMetadata = !this.revealMetadata;
  }
}
