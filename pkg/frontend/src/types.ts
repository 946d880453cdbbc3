/** Payload shapes of the review API (/api/v1). */

export type CandidateState = "pending" | "accepted" | "rejected" | "auto-accepted";
export type Verdict = "accept" | "reject";

export interface CandidatePayload {
  candidate_id: string;
  left: string;
  right: string;
  scope: "sibling" | "cross";
  heuristic_step: number;
  transformed_name: string;
  location_evidence: "city-match" | "country-match" | "none";
  state: CandidateState;
}

export interface LocationPayload {
  city: string;
  country: string;
  continent: string;
  lat?: number;
  lon?: number;
}

export interface IxpSummary {
  canonical_id: string;
  sources: string[];
  members: [string, string][];
  names: string[];
  locations: LocationPayload[];
  status_by_source: Record<string, string>;
  participant_counts: Record<string, number>;
  urls: string[];
  continent: string;
}

export interface QueueEntry {
  candidate: CandidatePayload;
  left: IxpSummary;
  right: IxpSummary;
  evidence: string[];
  pair: string;
}

export interface QueuePage {
  items: QueueEntry[];
  next_cursor: string | null;
}

export interface PairProgress {
  pending: number;
  accepted: number;
  rejected: number;
  working_left: number;
  working_right: number;
}

export interface Progress {
  pairs: Record<string, PairProgress>;
  totals: {
    pending: number;
    accepted: number;
    rejected: number;
    candidates: number;
  };
}

export interface QueueFilter {
  pair?: string;
  step?: number;
  continent?: string;
  cursor?: string;
  limit?: number;
}

/** Badge labels for the six heuristic steps. */
export const STEP_LABELS: Record<number, string> = {
  1: "identity",
  2: "lowercase",
  3: "truncate-2-words",
  4: "truncate-1-word",
  5: "strip-nonword",
  6: "manual",
};
