import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { AnnotationSession, MAX_TERMS, progressLabel } from "../src/session";
import { ClaimSummary } from "../src/types";

const CLAIM: ClaimSummary = {
    id: "c1",
    title: "Did George Soros fund the migrant caravan",
    published: "2020-06-01",
    topics: ["clinton"],
    tokens: ["george", "soros", "fund", "migrant", "caravan"],
    labeled: false,
};

interface RecordedCall {
    url: string;
    body: unknown;
}

function jsonResponse(payload: unknown, status = 200): Response {
    return new Response(JSON.stringify(payload), {
        status,
        headers: { "Content-Type": "application/json" },
    });
}

describe("AnnotationSession", () => {
    let calls: RecordedCall[];
    let hitsByTerms: (terms: string[]) => number;

    beforeEach(() => {
        calls = [];
        hitsByTerms = (terms) => 100 - 10 * terms.length;
        vi.stubGlobal(
            "fetch",
            vi.fn(async (url: string, init?: RequestInit) => {
                const body = init?.body ? JSON.parse(init.body as string) : null;
                calls.push({ url, body });
                if (url.endsWith("/query")) {
                    const hits = hitsByTerms(body.terms);
                    return jsonResponse({
                        hits,
                        sample: hits > 0 ? [{ id: "d1", platform: "reddit", community: "news", kind: "post", timestamp: 1600000000, text: "sample" }] : [],
                    });
                }
                if (url.endsWith("/labels")) {
                    return jsonResponse({ ok: true, labeled_claims: 1 });
                }
                throw new Error(`unexpected url ${url}`);
            }),
        );
    });

    afterEach(() => {
        vi.unstubAllGlobals();
    });

    function session(): AnnotationSession {
        return new AnnotationSession(new ApiClient("http://test"), CLAIM);
    }

    it("each toggle issues a query and the hit count comes from the response", async () => {
        const s = session();
        await s.toggle("soros");
        expect(calls.filter((c) => c.url.endsWith("/query"))).toHaveLength(1);
        expect(s.hits()).toBe(90);

        await s.toggle("caravan");
        expect(calls.filter((c) => c.url.endsWith("/query"))).toHaveLength(2);
        expect(calls.at(-1)?.body).toMatchObject({ terms: ["soros", "caravan"] });
        expect(s.hits()).toBe(80);

        // toggling off re-queries too
        await s.toggle("caravan");
        expect(calls.filter((c) => c.url.endsWith("/query"))).toHaveLength(3);
        expect(s.hits()).toBe(90);
    });

    it("rejects a fifth term client-side without a request", async () => {
        const s = session();
        for (const term of ["george", "soros", "fund", "migrant"]) {
            expect((await s.toggle(term)).accepted).toBe(true);
        }
        const before = calls.length;
        const outcome = await s.toggle("caravan");
        expect(outcome.accepted).toBe(false);
        expect(outcome.reason).toContain(`${MAX_TERMS}`);
        expect(calls.length).toBe(before);
        expect(s.terms()).toHaveLength(MAX_TERMS);
    });

    it("rejects words that are not part of the claim", async () => {
        const s = session();
        const outcome = await s.toggle("laser");
        expect(outcome.accepted).toBe(false);
        expect(calls).toHaveLength(0);
    });

    it("commit posts the label payload and counts commits", async () => {
        const s = session();
        await s.toggle("soros");
        await s.toggle("caravan");
        await s.commit(true);
        const label = calls.find((c) => c.url.endsWith("/labels"));
        expect(label?.body).toEqual({
            claim_id: "c1",
            terms: ["soros", "caravan"],
            relevant: 1,
            annotator: "ui",
        });
        expect(s.labelsCommitted).toBe(1);
    });

    it("commit requires between 2 and 4 selected terms", async () => {
        const s = session();
        await s.toggle("soros");
        expect(s.commitAllowed()).toBe(false);
        await expect(s.commit(true)).rejects.toThrow(/2-4 terms/);
        await s.toggle("caravan");
        expect(s.commitAllowed()).toBe(true);
    });

    it("zero hits produce the broaden-query hint", async () => {
        hitsByTerms = () => 0;
        const s = session();
        await s.toggle("soros");
        await s.toggle("fund");
        expect(s.hits()).toBe(0);
        expect(s.hint()).toMatch(/remove a term/i);
    });

    it("clearing the selection clears the result without a request", async () => {
        const s = session();
        await s.toggle("soros");
        const before = calls.length;
        await s.toggle("soros");
        expect(s.hits()).toBeNull();
        expect(calls.length).toBe(before);
    });

    it("doc quick-marks are per-document and reset on re-query", async () => {
        const s = session();
        await s.toggle("soros");
        s.markDoc("reddit:d1", "relevant");
        expect(s.marks.get("reddit:d1")).toBe("relevant");
        await s.runQuery();
        expect(s.marks.size).toBe(0);
    });
});

describe("progressLabel", () => {
    it("formats labeled/total", () => {
        expect(progressLabel(3, 50)).toBe("3/50");
    });
});
