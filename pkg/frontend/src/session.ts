import { ApiClient } from "./api";
import { ClaimSummary, QueryResult } from "./types";

export const MAX_TERMS = 4;
export const MIN_COMMIT_TERMS = 2;

export interface ToggleOutcome {
    accepted: boolean;
    reason?: string;
}

export type DocMark = "relevant" | "irrelevant";

// Per-claim annotation state. Nothing here is authoritative: hit counts and
// samples always come from the last /query response, and committed labels
// live server-side, so a reload rebuilds the same picture.
export class AnnotationSession {
    readonly claim: ClaimSummary;
    selected: string[] = [];
    result: QueryResult | null = null;
    marks = new Map<string, DocMark>();
    labelsCommitted = 0;
    lastError: string | null = null;

    constructor(private api: ApiClient, claim: ClaimSummary) {
        this.claim = claim;
    }

    terms(): string[] {
        return [...this.selected];
    }

    isSelected(term: string): boolean {
        return this.selected.includes(term);
    }

    // Toggling a claim word in or out of the query re-queries the server;
    // selections beyond MAX_TERMS are rejected before any request is made.
    async toggle(term: string): Promise<ToggleOutcome> {
        if (!this.claim.tokens.includes(term)) {
            return { accepted: false, reason: `"${term}" is not a word of this claim` };
        }
        if (this.isSelected(term)) {
            this.selected = this.selected.filter((t) => t !== term);
        } else {
            if (this.selected.length >= MAX_TERMS) {
                return { accepted: false, reason: `at most ${MAX_TERMS} terms` };
            }
            this.selected.push(term);
        }
        if (this.selected.length === 0) {
            this.result = null;
            return { accepted: true };
        }
        await this.runQuery();
        return { accepted: true };
    }

    async runQuery(): Promise<QueryResult> {
        this.lastError = null;
        try {
            this.result = await this.api.query(this.terms(), this.claim.id);
            this.marks.clear();
            return this.result;
        } catch (err) {
            this.lastError = err instanceof Error ? err.message : String(err);
            throw err;
        }
    }

    hits(): number | null {
        return this.result ? this.result.hits : null;
    }

    hint(): string | null {
        if (this.result && this.result.hits === 0) {
            return "No results - remove a term or pick different claim words";
        }
        if (this.selected.length > 0 && this.selected.length < MIN_COMMIT_TERMS) {
            return "Select at least 2 terms to commit a label";
        }
        return null;
    }

    markDoc(docKey: string, mark: DocMark): void {
        this.marks.set(docKey, mark);
    }

    commitAllowed(): boolean {
        return this.selected.length >= MIN_COMMIT_TERMS && this.selected.length <= MAX_TERMS;
    }

    // "Commit as ground truth": persist the current selection as a label.
    async commit(relevant: boolean): Promise<number> {
        if (!this.commitAllowed()) {
            throw new Error(`select ${MIN_COMMIT_TERMS}-${MAX_TERMS} terms before committing`);
        }
        const ack = await this.api.addLabel(this.claim.id, this.terms(), relevant);
        this.labelsCommitted += 1;
        return ack.labeled_claims;
    }
}

export function progressLabel(labeled: number, total: number): string {
    return `${labeled}/${total}`;
}
