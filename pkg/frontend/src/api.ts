/**
 * Typed client for the gateway's annotation HTTP API.
 *
 * The UI consumes only this documented surface; it never touches the
 * dataset store directly. A fetch implementation can be injected for
 * testing.
 */

export interface LeafInfo {
  id: string;
  display_name: string;
  path: string[];
  description: string;
  examples: string[];
}

export interface TaxonomyResponse {
  version: string;
  source_digest: string;
  default_locale: string;
  leaves: LeafInfo[];
}

export interface ReviewInfo {
  annotator_id: string;
  action: string;
  timestamp: string;
}

export interface ItemRecord {
  id: string;
  text: string;
  label_id: string | null;
  source: string;
  provenance: string;
  locale: string;
  removed: boolean;
  revision: number;
  review?: ReviewInfo;
}

export interface ItemPage {
  items: ItemRecord[];
  total: number;
  offset: number;
  limit: number;
}

export type ReviewAction = 'confirmed' | 'relabeled' | 'edited' | 'removed';

export interface ListFilters {
  provenance?: string;
  label?: string;
  source?: string;
  pending?: boolean;
  offset?: number;
  limit?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Another annotator's action landed first; `current` is the fresh state. */
export class ConflictError extends Error {
  constructor(readonly current: ItemRecord) {
    super(`item ${current.id} changed to revision ${current.revision}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    readonly baseUrl: string,
    readonly annotatorId: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    readonly annotatorHeader = 'X-Annotator-Id',
  ) {}

  private async request(path: string, init: RequestInit = {}): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: {
        'Content-Type': 'application/json',
        [this.annotatorHeader]: this.annotatorId,
        ...(init.headers ?? {}),
      },
    });
    const body = await response.json().catch(() => ({}));
    if (response.status === 409) {
      throw new ConflictError((body as { current: ItemRecord }).current);
    }
    if (!response.ok) {
      const detail = (body as { detail?: string }).detail ?? response.statusText;
      throw new ApiError(response.status, detail);
    }
    return body;
  }

  async getTaxonomy(): Promise<TaxonomyResponse> {
    return (await this.request('/v1/taxonomy')) as TaxonomyResponse;
  }

  async listItems(filters: ListFilters = {}): Promise<ItemPage> {
    const params = new URLSearchParams();
    if (filters.provenance) params.set('provenance', filters.provenance);
    if (filters.label) params.set('label', filters.label);
    if (filters.source) params.set('source', filters.source);
    if (filters.pending) params.set('pending', 'true');
    if (filters.offset) params.set('offset', String(filters.offset));
    if (filters.limit) params.set('limit', String(filters.limit));
    const query = params.toString();
    return (await this.request(`/v1/annotation/items${query ? `?${query}` : ''}`)) as ItemPage;
  }

  async addItems(
    items: Array<{ text: string; label_id?: string; source?: string; provenance?: string }>,
  ): Promise<string[]> {
    const body = (await this.request('/v1/annotation/items', {
      method: 'POST',
      body: JSON.stringify({ items }),
    })) as { ids: string[] };
    return body.ids;
  }

  async submitAction(
    itemId: string,
    action: ReviewAction,
    baseRevision: number,
    options: { newLabel?: string; newText?: string } = {},
  ): Promise<ItemRecord> {
    const body = (await this.request(`/v1/annotation/items/${itemId}/action`, {
      method: 'POST',
      body: JSON.stringify({
        action,
        base_revision: baseRevision,
        new_label: options.newLabel ?? null,
        new_text: options.newText ?? null,
      }),
    })) as { item: ItemRecord };
    return body.item;
  }

  async getProgress(): Promise<Record<string, number>> {
    const body = (await this.request('/v1/annotation/progress')) as {
      actions_by_annotator: Record<string, number>;
    };
    return body.actions_by_annotator;
  }
}
