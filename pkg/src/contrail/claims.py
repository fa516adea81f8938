"""Claim loading, text preprocessing, candidate keyword-query generation,
and the ground-truth label store behind the annotation loop.
"""

from __future__ import annotations

import itertools
import json
import math
import time
import warnings
from collections import Counter
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import Document, DocumentStore, normalize
from .stopwords import STOPWORDS

MIN_TERMS = 2
MAX_TERMS = 4


@dataclass(frozen=True)
class Claim:
    id: str
    title: str
    published: Optional[date] = None
    topics: tuple[str, ...] = ()

    def tokens(self) -> list[str]:
        return preprocess(self.title)


@dataclass(frozen=True)
class CandidateQuery:
    claim_id: str
    terms: tuple[str, ...]  # ordered, deduplicated, 2..4 tokens
    source: str = "generated"  # "base_keyword" | "generated" | "annotated"

    def term_set(self) -> frozenset[str]:
        return frozenset(self.terms)


@dataclass(frozen=True)
class GroundTruthLabel:
    claim_id: str
    terms: tuple[str, ...]
    relevant: bool
    annotator: str = ""
    ts: int = 0

    def key(self) -> tuple[str, frozenset[str]]:
        return (self.claim_id, frozenset(self.terms))


def preprocess(title: str) -> list[str]:
    """Lowercase, strip punctuation, drop stopwords; original order kept."""
    return [tok for tok in normalize(title) if tok not in STOPWORDS]


def load_claims(path: str | Path) -> list[Claim]:
    """Load claims from JSONL {"id","title","published","topics"}."""
    claims: list[Claim] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            claim_id = str(rec["id"])
            title = rec["title"]
            if not title or not title.strip():
                raise ValueError(f"claim {claim_id!r} has empty title (line {line_no})")
            if claim_id in seen:
                raise ValueError(f"duplicate claim id {claim_id!r} (line {line_no})")
            seen.add(claim_id)
            published = rec.get("published")
            claims.append(
                Claim(
                    id=claim_id,
                    title=title,
                    published=date.fromisoformat(published) if published else None,
                    topics=tuple(rec.get("topics") or ()),
                )
            )
    return claims


def write_claims(claims: Iterable[Claim], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in claims:
            rec = {
                "id": c.id,
                "title": c.title,
                "published": c.published.isoformat() if c.published else None,
                "topics": list(c.topics),
            }
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def _claim_tfidf(tokens: Sequence[str], store: Optional[DocumentStore]) -> dict[str, float]:
    # tf within the claim; idf from the store when available, else 1 so the
    # ranking degrades to plain term frequency.
    counts = Counter(tokens)
    total = len(tokens)
    scores: dict[str, float] = {}
    n_docs = len(store) if store is not None else 0
    for tok, cnt in counts.items():
        tf = cnt / total
        if store is not None:
            df = store.doc_frequency(tok)
            idf = math.log((1 + n_docs) / (1 + df)) + 1.0
        else:
            idf = 1.0
        scores[tok] = tf * idf
    return scores


def candidate_queries(
    claim: Claim,
    mode: str = "combinations",
    cap: int = 100,
    store: Optional[DocumentStore] = None,
) -> list[CandidateQuery]:
    """Generate candidate keyword queries of 2..4 claim tokens.

    ``combinations`` enumerates all unordered token subsets of size 2..4,
    ranked by descending sum of within-claim tf-idf and truncated at
    ``cap``. ``contiguous`` keeps positional n-grams of length 2..4.
    Deterministic for fixed inputs (and stopword list version).
    """
    tokens = preprocess(claim.title)
    unique: list[str] = []
    seen: set[str] = set()
    for tok in tokens:
        if tok not in seen:
            seen.add(tok)
            unique.append(tok)
    if len(unique) < MIN_TERMS:
        warnings.warn(f"claim {claim.id!r}: fewer than {MIN_TERMS} usable tokens, no candidates")
        return []

    if mode == "combinations":
        tfidf = _claim_tfidf(tokens, store)
        scored: list[tuple[float, int, tuple[str, ...]]] = []
        for size in range(MIN_TERMS, MAX_TERMS + 1):
            for combo in itertools.combinations(unique, size):
                scored.append((sum(tfidf[t] for t in combo), size, combo))
        scored.sort(key=lambda item: (-item[0], item[1], item[2]))
        picked = [combo for _, _, combo in scored[:cap]]
    elif mode == "contiguous":
        picked = []
        seen_sets: set[frozenset[str]] = set()
        for size in range(MIN_TERMS, MAX_TERMS + 1):
            for start in range(len(tokens) - size + 1):
                gram = tuple(tokens[start: start + size])
                if len(set(gram)) != size:
                    continue  # repeated token breaks set semantics
                key = frozenset(gram)
                if key not in seen_sets:
                    seen_sets.add(key)
                    picked.append(gram)
        picked = picked[:cap]
    else:
        raise ValueError(f"unknown candidate mode: {mode!r}")

    return [CandidateQuery(claim_id=claim.id, terms=terms) for terms in picked]


def base_keyword(claim: Claim) -> Optional[CandidateQuery]:
    """Two-token seed query: the first and last claim tokens.

    Claim titles lead with the subject and end near the object, so this is
    a cheap stand-in for a subject/object pair and seeds the annotation
    loop.
    """
    tokens = claim.tokens()
    unique = list(dict.fromkeys(tokens))
    if len(unique) < 2:
        return None
    return CandidateQuery(claim_id=claim.id, terms=(unique[0], unique[-1]), source="base_keyword")


def annotation_sample(
    candidate: CandidateQuery | Sequence[str],
    store: DocumentStore,
    n: int = 20,
    seed: int = 0,
    community: Optional[str] = None,
) -> list[Document]:
    """Uniform sample (without replacement) of query hits for review.

    Deterministic given the seed; returns all hits when there are fewer
    than ``n``. Result is ordered by timestamp for display.
    """
    terms = candidate.terms if isinstance(candidate, CandidateQuery) else tuple(candidate)
    hits = store.query(terms, community=community)
    if not hits:
        return []
    if len(hits) <= n:
        return list(hits)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(hits), size=n, replace=False))
    return [hits[i] for i in idx]


class LabelStore:
    """Append-only JSONL label file; last write wins per (claim_id, terms)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._labels: dict[tuple[str, frozenset[str]], GroundTruthLabel] = {}
        if self.path.exists():
            self._read()

    def _read(self) -> None:
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                label = GroundTruthLabel(
                    claim_id=str(rec["claim_id"]),
                    terms=tuple(rec["terms"]),
                    relevant=bool(rec["relevant"]),
                    annotator=rec.get("annotator", ""),
                    ts=int(rec.get("ts", 0)),
                )
                self._labels[label.key()] = label

    def add(self, label: GroundTruthLabel) -> None:
        rec = {
            "claim_id": label.claim_id,
            "terms": list(label.terms),
            "relevant": 1 if label.relevant else 0,
            "annotator": label.annotator,
            "ts": label.ts or int(time.time()),
        }
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
        self._labels[label.key()] = label

    def all(self) -> list[GroundTruthLabel]:
        return list(self._labels.values())

    def for_claim(self, claim_id: str) -> list[GroundTruthLabel]:
        return [lab for lab in self._labels.values() if lab.claim_id == claim_id]

    def relevant_term_sets(self, claim_id: str) -> list[frozenset[str]]:
        return [frozenset(lab.terms) for lab in self.for_claim(claim_id) if lab.relevant]

    def labeled_claim_ids(self) -> set[str]:
        return {cid for (cid, _terms) in self._labels}

    def __len__(self) -> int:
        return len(self._labels)
