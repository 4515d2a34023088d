// HTTP transport for the review service API.

import type { FilterMode, LabelAck, LabelValue, Progress, Transport, TripletView } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class HttpTransport implements Transport {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = await response.json();
        detail = body.detail ?? body.message ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(`request failed: ${detail}`, response.status);
    }
    return (await response.json()) as T;
  }

  fetchBatch(filter: FilterMode, page: number, pageSize: number): Promise<TripletView[]> {
    const params = new URLSearchParams({
      filter,
      page: String(page),
      page_size: String(pageSize),
    });
    return this.request<TripletView[]>(`/api/triplets?${params}`);
  }

  submitLabel(tripletId: string, label: LabelValue, curator: string): Promise<LabelAck> {
    return this.request<LabelAck>("/api/labels", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ triplet_id: tripletId, label, curator }),
    });
  }

  fetchProgress(): Promise<Progress> {
    return this.request<Progress>("/api/progress");
  }
}
