import { CandidatePayload, ClaimSummary, LabelAck, Progress, QueryResult } from "./types";

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function asJson<T>(response: Response): Promise<T> {
    if (!response.ok) {
        let detail = response.statusText;
        try {
            const body = await response.json();
            detail = body.detail ?? detail;
        } catch {
            // non-JSON error body; keep the status text
        }
        throw new ApiError(response.status, detail);
    }
    return response.json() as Promise<T>;
}

export class ApiClient {
    constructor(public baseUrl: string) {}

    private url(path: string): string {
        return this.baseUrl.replace(/\/$/, "") + path;
    }

    listClaims(): Promise<ClaimSummary[]> {
        return fetch(this.url("/claims")).then((r) => asJson<ClaimSummary[]>(r));
    }

    candidates(claimId: string): Promise<CandidatePayload[]> {
        return fetch(this.url(`/claims/${encodeURIComponent(claimId)}/candidates`)).then((r) =>
            asJson<CandidatePayload[]>(r),
        );
    }

    query(terms: string[], claimId?: string): Promise<QueryResult> {
        return fetch(this.url("/query"), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ terms, claim_id: claimId ?? null }),
        }).then((r) => asJson<QueryResult>(r));
    }

    addLabel(claimId: string, terms: string[], relevant: boolean, annotator = "ui"): Promise<LabelAck> {
        return fetch(this.url("/labels"), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ claim_id: claimId, terms, relevant: relevant ? 1 : 0, annotator }),
        }).then((r) => asJson<LabelAck>(r));
    }

    progress(): Promise<Progress> {
        return fetch(this.url("/progress")).then((r) => asJson<Progress>(r));
    }
}
