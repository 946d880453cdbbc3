/** Thin typed client over the review API; all state lives server-side. */

import type {
  CandidatePayload,
  IxpSummary,
  Progress,
  QueueEntry,
  QueueFilter,
  QueuePage,
  Verdict,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError("unreachable", `API unreachable: ${String(err)}`, 0);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const code = typeof body.code === "string" ? body.code : "error";
      const message =
        typeof body.message === "string" ? body.message : response.statusText;
      throw new ApiError(code, message, response.status);
    }
    return body as T;
  }

  listCandidates(filter: QueueFilter = {}, state = "pending"): Promise<QueuePage> {
    const params = new URLSearchParams({ state });
    if (filter.pair) params.set("pair", filter.pair);
    if (filter.step !== undefined) params.set("step", String(filter.step));
    if (filter.continent) params.set("continent", filter.continent);
    if (filter.cursor) params.set("cursor", filter.cursor);
    if (filter.limit !== undefined) params.set("limit", String(filter.limit));
    return this.request(`/api/v1/candidates?${params}`);
  }

  getCandidate(candidateId: string): Promise<QueueEntry> {
    return this.request(`/api/v1/candidates/${encodeURIComponent(candidateId)}`);
  }

  decide(
    candidateId: string,
    verdict: Verdict,
    reviewer: string,
    note?: string,
  ): Promise<{ ok: boolean; candidate: CandidatePayload }> {
    return this.request(
      `/api/v1/candidates/${encodeURIComponent(candidateId)}/decision`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ verdict, reviewer, ...(note ? { note } : {}) }),
      },
    );
  }

  createManualCandidate(
    left: string,
    right: string,
  ): Promise<{ ok: boolean; candidate: CandidatePayload }> {
    return this.request("/api/v1/candidates", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ left, right }),
    });
  }

  progress(): Promise<Progress> {
    return this.request("/api/v1/progress");
  }

  searchIxps(
    query: string,
    source?: string,
    unmatchedFor?: string,
  ): Promise<{ items: IxpSummary[] }> {
    const params = new URLSearchParams({ q: query });
    if (source) params.set("source", source);
    if (unmatchedFor) params.set("unmatched_for", unmatchedFor);
    return this.request(`/api/v1/ixps?${params}`);
  }

  getIxp(canonicalId: string): Promise<IxpSummary> {
    return this.request(`/api/v1/ixps/${encodeURIComponent(canonicalId)}`);
  }
}
