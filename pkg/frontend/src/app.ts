import { ApiClient, ApiError } from "./api";
import { AnnotationSession, MAX_TERMS, progressLabel } from "./session";
import { ClaimSummary, DocSample, Progress } from "./types";

const RETRY_MS = 4000;

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function docKey(doc: DocSample): string {
    return `${doc.platform}:${doc.id}`;
}

export class App {
    private claims: ClaimSummary[] = [];
    private progress: Progress | null = null;
    private session: AnnotationSession | null = null;
    private root: HTMLElement;

    constructor(private api: ApiClient, root: HTMLElement) {
        this.root = root;
    }

    async start(): Promise<void> {
        try {
            [this.claims, this.progress] = await Promise.all([this.api.listClaims(), this.api.progress()]);
            this.render();
        } catch (err) {
            this.renderRetryBanner(err);
        }
    }

    private renderRetryBanner(err: unknown): void {
        this.root.replaceChildren();
        const banner = el("div", "banner error");
        const status = err instanceof ApiError ? ` (${err.status})` : "";
        banner.append(
            el("span", "", `API unreachable${status} at ${this.api.baseUrl} - retrying...`),
        );
        this.root.append(banner);
        window.setTimeout(() => void this.start(), RETRY_MS);
    }

    private async refreshProgress(): Promise<void> {
        this.progress = await this.api.progress();
        this.renderClaimList();
    }

    private render(): void {
        this.root.replaceChildren();
        const layout = el("div", "layout");
        layout.append(el("nav", "claims-panel"), el("main", "workbench-panel"));
        this.root.append(layout);
        this.renderClaimList();
        this.renderWorkbench();
    }

    private renderClaimList(): void {
        const panel = this.root.querySelector(".claims-panel");
        if (!panel) return;
        panel.replaceChildren();

        const header = el("header");
        header.append(el("h1", "", "Claims"));
        if (this.progress) {
            header.append(el("span", "progress-badge", progressLabel(this.progress.labeled, this.progress.total)));
        }
        panel.append(header);

        if (this.claims.length === 0) {
            panel.append(el("p", "empty-state", "No claims loaded - point the pipeline at a claims file."));
            return;
        }
        const list = el("ul", "claim-list");
        for (const claim of this.claims) {
            const item = el("li", "claim-item");
            if (this.session?.claim.id === claim.id) item.classList.add("active");
            const byClaim = this.progress?.by_claim[claim.id];
            const status = byClaim && byClaim.labels > 0 ? (byClaim.has_positive ? "done" : "partial") : "todo";
            item.append(el("span", `status ${status}`), el("span", "title", claim.title));
            item.addEventListener("click", () => this.openClaim(claim));
            list.append(item);
        }
        panel.append(list);
    }

    private openClaim(claim: ClaimSummary): void {
        this.session = new AnnotationSession(this.api, claim);
        this.renderClaimList();
        this.renderWorkbench();
    }

    private renderWorkbench(): void {
        const panel = this.root.querySelector(".workbench-panel");
        if (!panel) return;
        panel.replaceChildren();
        const session = this.session;
        if (!session) {
            panel.append(el("p", "empty-state", "Select a claim to start annotating."));
            return;
        }

        panel.append(el("h2", "", session.claim.title));

        const chips = el("div", "chips");
        for (const token of session.claim.tokens) {
            const chip = el("button", "chip" + (session.isSelected(token) ? " on" : ""), token);
            chip.addEventListener("click", async () => {
                // query failures surface via session.lastError; the toggle
                // itself still counts as accepted
                const outcome = await session.toggle(token).catch(() => ({ accepted: true, reason: undefined }));
                if (!outcome.accepted && outcome.reason) this.flash(outcome.reason);
                this.renderWorkbench();
            });
            chips.append(chip);
        }
        panel.append(chips);

        const hits = session.hits();
        const hitLine = el("div", "hit-count");
        hitLine.textContent =
            hits === null ? `Toggle claim words to query (max ${MAX_TERMS})` : `${hits} matching documents`;
        panel.append(hitLine);

        const hint = session.hint();
        if (hint) panel.append(el("p", "hint", hint));
        if (session.lastError) panel.append(el("p", "banner error", session.lastError));

        const actions = el("div", "actions");
        const commitYes = el("button", "commit yes", "Commit as ground truth");
        const commitNo = el("button", "commit no", "Mark combination irrelevant");
        commitYes.disabled = commitNo.disabled = !session.commitAllowed();
        for (const [button, relevant] of [[commitYes, true], [commitNo, false]] as const) {
            button.addEventListener("click", async () => {
                try {
                    await session.commit(relevant);
                    this.flash(relevant ? "Committed as relevant" : "Committed as irrelevant");
                    await this.refreshProgress();
                } catch (err) {
                    this.flash(err instanceof Error ? err.message : String(err));
                }
            });
        }
        actions.append(commitYes, commitNo);
        panel.append(actions);

        if (session.result) {
            const list = el("ol", "sample-list");
            for (const doc of session.result.sample) {
                const item = el("li", "sample-doc");
                const meta = el("div", "meta", `${doc.community} - ${doc.kind} - ${new Date(doc.timestamp * 1000).toISOString().slice(0, 10)}`);
                const marks = el("div", "marks");
                for (const mark of ["relevant", "irrelevant"] as const) {
                    const btn = el("button", `mark ${mark}`, mark === "relevant" ? "relevant" : "off-topic");
                    if (session.marks.get(docKey(doc)) === mark) btn.classList.add("on");
                    btn.addEventListener("click", () => {
                        session.markDoc(docKey(doc), mark);
                        this.renderWorkbench();
                    });
                    marks.append(btn);
                }
                item.append(meta, el("p", "text", doc.text), marks);
                list.append(item);
            }
            panel.append(list);
        }
    }

    private flash(message: string): void {
        const note = el("div", "flash", message);
        this.root.append(note);
        window.setTimeout(() => note.remove(), 2500);
    }
}
