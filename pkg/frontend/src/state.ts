/**
 * Review-session state machine.
 *
 * The UI is stateless beyond session filters: every mutation round-trips
 * through the gateway and the queue is re-derivable from the server at any
 * time. Actions update optimistically (the item leaves the pending queue);
 * a 409 conflict reconciles by swapping in the server's current state and
 * surfacing a banner instead of silently overwriting the other annotator.
 */
import {
  ConflictError,
  GatewayClient,
  type ItemRecord,
  type ListFilters,
  type ReviewAction,
} from './api.js';

export interface ConflictNotice {
  item: ItemRecord;
  message: string;
}

export class ReviewSession {
  items: ItemRecord[] = [];
  total = 0;
  index = 0;
  filters: ListFilters;
  conflict: ConflictNotice | null = null;
  progress: Record<string, number> = {};
  actionsThisSession = 0;

  constructor(
    private readonly client: GatewayClient,
    filters: ListFilters = {},
  ) {
    this.filters = { pending: true, limit: 50, ...filters };
  }

  async refresh(): Promise<void> {
    const page = await this.client.listItems(this.filters);
    this.items = page.items;
    this.total = page.total;
    this.index = Math.min(this.index, Math.max(0, this.items.length - 1));
    this.progress = await this.client.getProgress();
  }

  current(): ItemRecord | null {
    return this.items[this.index] ?? null;
  }

  next(): void {
    if (this.index < this.items.length - 1) this.index += 1;
  }

  previous(): void {
    if (this.index > 0) this.index -= 1;
  }

  dismissConflict(): void {
    this.conflict = null;
  }

  private async act(
    action: ReviewAction,
    options: { newLabel?: string; newText?: string } = {},
  ): Promise<ItemRecord | null> {
    const item = this.current();
    if (!item) return null;
    try {
      const updated = await this.client.submitAction(item.id, action, item.revision, options);
      // pending queue: reviewed items drop out; edited text keeps position
      this.items.splice(this.index, 1);
      this.total -= 1;
      this.index = Math.min(this.index, Math.max(0, this.items.length - 1));
      this.actionsThisSession += 1;
      this.progress[this.client.annotatorId] =
        (this.progress[this.client.annotatorId] ?? 0) + 1;
      this.conflict = null;
      return updated;
    } catch (error) {
      if (error instanceof ConflictError) {
        this.items[this.index] = error.current;
        this.conflict = {
          item: error.current,
          message:
            `Item changed by ${error.current.review?.annotator_id ?? 'another annotator'} ` +
            `(now revision ${error.current.revision}); review the refreshed state.`,
        };
        return null;
      }
      throw error;
    }
  }

  confirm(): Promise<ItemRecord | null> {
    return this.act('confirmed');
  }

  relabel(labelId: string): Promise<ItemRecord | null> {
    return this.act('relabeled', { newLabel: labelId });
  }

  edit(text: string): Promise<ItemRecord | null> {
    return this.act('edited', { newText: text });
  }

  remove(): Promise<ItemRecord | null> {
    return this.act('removed');
  }
}
