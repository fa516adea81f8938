// Payload shapes of the annotation API. The UI never recomputes any of
// these numbers locally; everything displayed originates from a response.

export interface ClaimSummary {
    id: string;
    title: string;
    published: string | null;
    topics: string[];
    tokens: string[];
    labeled: boolean;
}

export interface DocSample {
    id: string;
    platform: string;
    community: string;
    kind: string;
    timestamp: number;
    text: string;
}

export interface QueryResult {
    hits: number;
    sample: DocSample[];
}

export interface ClaimProgress {
    labels: number;
    has_positive: boolean;
}

export interface Progress {
    labeled: number;
    total: number;
    by_claim: Record<string, ClaimProgress>;
}

export interface LabelAck {
    ok: boolean;
    labeled_claims: number;
}

export interface CandidatePayload {
    terms: string[];
    source: string;
}
