/** Shared payload builders for unit tests. */

import type {
  CandidatePayload,
  IxpSummary,
  Progress,
  QueueEntry,
} from "../src/types.js";

export function ixp(overrides: Partial<IxpSummary> = {}): IxpSummary {
  return {
    canonical_id: "cx-0000000000000001",
    sources: ["euro-ix"],
    members: [["euro-ix", "e-1"]],
    names: ["LINX"],
    locations: [{ city: "London", country: "GB", continent: "Europe" }],
    status_by_source: { "euro-ix": "active" },
    participant_counts: { "euro-ix": 12 },
    urls: [],
    continent: "Europe",
    ...overrides,
  };
}

export function candidate(
  overrides: Partial<CandidatePayload> = {},
): CandidatePayload {
  return {
    candidate_id: "mc-0000000000000001",
    left: "cx-0000000000000001",
    right: "cx-0000000000000002",
    scope: "cross",
    heuristic_step: 1,
    transformed_name: "LINX",
    location_evidence: "city-match",
    state: "pending",
    ...overrides,
  };
}

export function entry(overrides: Partial<QueueEntry> = {}): QueueEntry {
  return {
    candidate: candidate(),
    left: ixp(),
    right: ixp({
      canonical_id: "cx-0000000000000002",
      sources: ["peeringdb"],
      members: [["peeringdb", "p-1"]],
      status_by_source: { peeringdb: "unknown" },
      participant_counts: { peeringdb: 9 },
    }),
    evidence: ["step 1: identity", "matched name: LINX", "location: city-match"],
    pair: "euro-ix|peeringdb",
    ...overrides,
  };
}

export function progress(pending = 5, accepted = 0, rejected = 0): Progress {
  return {
    pairs: {
      "euro-ix|peeringdb": {
        pending,
        accepted,
        rejected,
        working_left: 6,
        working_right: 6,
      },
    },
    totals: {
      pending,
      accepted,
      rejected,
      candidates: pending + accepted + rejected,
    },
  };
}

type Handler = (init?: RequestInit) => { status?: number; body: unknown };

/** fetch stand-in routing on "METHOD path" with recorded calls. */
export function fakeFetch(routes: Record<string, Handler>) {
  const calls: { url: string; method: string; body?: unknown }[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    calls.push({
      url,
      method,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    const path = url.split("?")[0]!;
    const handler = routes[`${method} ${path}`];
    if (handler === undefined) {
      return new Response(
        JSON.stringify({ code: "not_found", message: `no route ${method} ${path}` }),
        { status: 404 },
      );
    }
    const { status = 200, body } = handler(init);
    return new Response(JSON.stringify(body), { status });
  };
  return { fetchFn, calls };
}
