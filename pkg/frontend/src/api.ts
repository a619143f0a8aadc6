// Thin typed client over the review service HTTP API. The fetch function is
// injected so tests can run against a scripted stub.

import type {
  DecisionRequest,
  DecisionResult,
  ProcessModel,
  QueueFilters,
  QueuePage,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly body: unknown,
  ) {
    super(message);
  }
}

export class TransportFailure extends Error {}

export class ConflictError extends ApiError {
  constructor(body: { error?: string; current?: unknown }) {
    super(body.error ?? 'conflict', 409, body);
  }
  get current(): unknown {
    return (this.body as { current?: unknown }).current;
  }
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base = '',
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new TransportFailure(String(err));
    }
    const body = await response.json().catch(() => ({}));
    if (response.status === 409) {
      throw new ConflictError(body as { error?: string; current?: unknown });
    }
    if (!response.ok) {
      throw new ApiError(`HTTP ${response.status} for ${path}`, response.status, body);
    }
    return body as T;
  }

  listQueue(page = 1, pageSize = 10, filters: QueueFilters = {}): Promise<QueuePage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (filters.status !== undefined) params.set('status', filters.status);
    if (filters.level !== undefined) params.set('level', String(filters.level));
    if (filters.method !== undefined) params.set('method', filters.method);
    return this.request<QueuePage>(`/api/queue?${params.toString()}`);
  }

  submitDecision(itemId: string, body: DecisionRequest): Promise<DecisionResult> {
    return this.request<DecisionResult>(`/api/items/${encodeURIComponent(itemId)}/decision`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  getProcess(modelId: string): Promise<ProcessModel> {
    return this.request<ProcessModel>(`/api/process/${encodeURIComponent(modelId)}`);
  }
}
