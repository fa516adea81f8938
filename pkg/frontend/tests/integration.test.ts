// Live end-to-end check against a real annotation server: a scripted
// session labels three fixture claims through the same ApiClient +
// AnnotationSession the browser uses, then the ranking dataset is rebuilt
// through the CLI and must come out with exactly those three query groups.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, rmSync, unlinkSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { AnnotationSession } from "../src/session";

const PORT = 8377;
const BASE = `http://127.0.0.1:${PORT}`;
const TRUE_PAIRS: Record<string, [string, string]> = {
    c1: ["soros", "caravan"],
    c2: ["clinton", "pizzeria"],
    c3: ["trump", "vaccine"],
};

let workDir: string;
let server: ChildProcess | null = null;

function cli(args: string[]): string {
    return execFileSync("python3", ["-m", "contrail.cli", ...args], {
        encoding: "utf-8",
        timeout: 120_000,
    });
}

async function waitForServer(timeoutMs = 30_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        try {
            const resp = await fetch(`${BASE}/claims`);
            if (resp.ok) return;
        } catch {
            // not up yet
        }
        await new Promise((resolve) => setTimeout(resolve, 300));
    }
    throw new Error("annotation server did not come up");
}

beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "contrail-ui-"));
    cli(["make-demo", "--out", workDir]);
    // start from an unlabeled corpus; the scripted session creates the labels
    unlinkSync(join(workDir, "labels.jsonl"));
    cli(["ingest", "--config", join(workDir, "config.json")]);
    server = spawn(
        "python3",
        ["-m", "contrail.cli", "serve", "--config", join(workDir, "config.json"), "--port", String(PORT)],
        { stdio: "ignore" },
    );
    await waitForServer();
}, 120_000);

afterAll(() => {
    server?.kill();
    if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("scripted annotation session against a live server", () => {
    it("labels 3 claims and leaves the ranking dataset buildable with 3 groups", async () => {
        const api = new ApiClient(BASE);
        const claims = await api.listClaims();
        expect(claims).toHaveLength(5);

        for (const claimId of Object.keys(TRUE_PAIRS)) {
            const claim = claims.find((c) => c.id === claimId)!;
            const session = new AnnotationSession(api, claim);
            const [first, second] = TRUE_PAIRS[claimId];

            // Hit counts must track live responses as terms toggle.
            await session.toggle(first);
            const broad = session.hits()!;
            expect(broad).toBeGreaterThan(0);
            const direct1 = await api.query([first], claimId);
            expect(broad).toBe(direct1.hits);

            await session.toggle(second);
            const narrow = session.hits()!;
            const direct2 = await api.query([first, second], claimId);
            expect(narrow).toBe(direct2.hits);
            expect(narrow).toBeLessThanOrEqual(broad);
            expect(session.result!.sample.length).toBeLessThanOrEqual(20);

            await session.commit(true);

            // also teach the ranker a negative: swap one true term for a
            // decoy word from the claim
            await session.toggle(second);
            const decoy = claim.tokens.find((t) => t !== first && t !== second)!;
            await session.toggle(decoy);
            await session.commit(false);
        }

        const progress = await api.progress();
        expect(progress.labeled).toBe(3);
        expect(progress.by_claim["c1"].has_positive).toBe(true);

        // Labels landed on disk through the API only.
        const labelLines = readFileSync(join(workDir, "labels.jsonl"), "utf-8")
            .trim()
            .split("\n")
            .map((line) => JSON.parse(line));
        expect(labelLines).toHaveLength(6);
        expect(new Set(labelLines.map((l) => l.claim_id))).toEqual(new Set(["c1", "c2", "c3"]));

        // Rebuild the ranking dataset via the CLI; the LETOR file must hold
        // exactly the three labeled claims as groups.
        cli(["candidates", "--config", join(workDir, "config.json")]);
        cli(["featurize", "--config", join(workDir, "config.json")]);
        cli(["train", "--config", join(workDir, "config.json")]);
        const letorPath = join(workDir, "out", "dataset.letor");
        expect(existsSync(letorPath)).toBe(true);
        const qids = new Set(
            readFileSync(letorPath, "utf-8")
                .trim()
                .split("\n")
                .map((line) => line.split(" # ")[1].split("|")[0]),
        );
        expect(qids).toEqual(new Set(["c1", "c2", "c3"]));
    }, 180_000);
});
