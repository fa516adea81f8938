"""Local HTTP API backing the annotation UI.

Read-only against the sealed document store; the only mutation is the
label file, written through immediately on POST /labels. Malformed bodies
return 400 with per-field errors; unknown claims return 404.
"""

from __future__ import annotations

import time
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .claims import (
    Claim,
    GroundTruthLabel,
    LabelStore,
    annotation_sample,
    candidate_queries,
    preprocess,
)
from .corpus import Document, DocumentStore

SAMPLE_SIZE = 20


class QueryRequest(BaseModel):
    terms: list[str] = Field(min_length=1)
    community: Optional[str] = None
    claim_id: Optional[str] = None
    seed: int = 0


class LabelRequest(BaseModel):
    claim_id: str
    terms: list[str] = Field(min_length=1, max_length=4)
    relevant: int = Field(ge=0, le=1)
    annotator: str = ""


def _doc_payload(doc: Document) -> dict:
    return {
        "id": doc.id,
        "platform": doc.platform,
        "community": doc.community,
        "kind": doc.kind,
        "timestamp": doc.timestamp,
        "text": doc.text,
    }


def create_app(
    store: DocumentStore,
    claims: list[Claim],
    label_store: LabelStore,
    candidate_mode: str = "combinations",
    candidate_cap: int = 50,
) -> FastAPI:
    app = FastAPI(title="contrail annotation api")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    by_id = {c.id: c for c in claims}

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = [
            {"field": ".".join(str(p) for p in err["loc"] if p != "body"), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": "invalid request body", "errors": errors})

    @app.get("/claims")
    def list_claims() -> list[dict]:
        labeled = label_store.labeled_claim_ids()
        return [
            {
                "id": c.id,
                "title": c.title,
                "published": c.published.isoformat() if c.published else None,
                "topics": list(c.topics),
                "tokens": preprocess(c.title),
                "labeled": c.id in labeled,
            }
            for c in claims
        ]

    @app.get("/claims/{claim_id}/candidates")
    def claim_candidates(claim_id: str) -> list[dict]:
        claim = by_id.get(claim_id)
        if claim is None:
            raise HTTPException(status_code=404, detail=f"unknown claim: {claim_id}")
        cands = candidate_queries(claim, mode=candidate_mode, cap=candidate_cap, store=store)
        return [{"terms": list(c.terms), "source": c.source} for c in cands]

    @app.post("/query")
    def query(body: QueryRequest) -> dict:
        hits = store.query(body.terms, community=body.community)
        sample = annotation_sample(body.terms, store, n=SAMPLE_SIZE, seed=body.seed, community=body.community)
        return {"hits": len(hits), "sample": [_doc_payload(d) for d in sample]}

    @app.post("/labels")
    def add_label(body: LabelRequest) -> dict:
        if body.claim_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown claim: {body.claim_id}")
        label = GroundTruthLabel(
            claim_id=body.claim_id,
            terms=tuple(body.terms),
            relevant=bool(body.relevant),
            annotator=body.annotator,
            ts=int(time.time()),
        )
        label_store.add(label)
        return {"ok": True, "labeled_claims": len(label_store.labeled_claim_ids())}

    @app.get("/progress")
    def progress() -> dict:
        by_claim = {}
        for claim in claims:
            labels = label_store.for_claim(claim.id)
            by_claim[claim.id] = {
                "labels": len(labels),
                "has_positive": any(lab.relevant for lab in labels),
            }
        labeled = sum(1 for info in by_claim.values() if info["labels"] > 0)
        return {"labeled": labeled, "total": len(claims), "by_claim": by_claim}

    return app
