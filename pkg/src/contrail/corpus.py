"""Document store: JSONL ingestion, conjunctive token queries, time-spanning
subsampling.

Documents are normalized once at ingest time into a token set; queries are
conjunctive over those tokens (token-boundary match, case-insensitive).
After ``seal()`` the store is immutable and safe for concurrent readers.
"""

from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

STORE_FORMAT = "contrail-store"
STORE_VERSION = 1

PLATFORMS = ("reddit", "twitter")
KINDS = ("post", "comment", "tweet")

_PUNCT_CACHE: dict[str, bool] = {}


def _is_punct(ch: str) -> bool:
    flag = _PUNCT_CACHE.get(ch)
    if flag is None:
        flag = unicodedata.category(ch).startswith("P")
        _PUNCT_CACHE[ch] = flag
    return flag


def normalize(text: str) -> list[str]:
    """Lowercase, strip Unicode punctuation, split on whitespace.

    Punctuation characters are removed (not replaced by spaces), so
    "AT&T" normalizes to the single token "att".
    """
    lowered = text.lower()
    cleaned = "".join(ch for ch in lowered if not _is_punct(ch))
    return cleaned.split()


def token_set(text: str) -> frozenset[str]:
    return frozenset(normalize(text))


@dataclass(frozen=True)
class Document:
    """One post, comment, or tweet."""

    id: str
    platform: str  # "reddit" | "twitter"
    community: str  # subreddit name, or "twitter"
    kind: str  # "post" | "comment" | "tweet"
    timestamp: int  # seconds since epoch, UTC
    text: str
    parent_id: Optional[str] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.platform, self.id)

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "platform": self.platform,
            "community": self.community,
            "kind": self.kind,
            "timestamp": self.timestamp,
            "text": self.text,
        }
        if self.parent_id is not None:
            rec["parent_id"] = self.parent_id
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Document":
        return cls(
            id=rec["id"],
            platform=rec["platform"],
            community=rec["community"],
            kind=rec["kind"],
            timestamp=int(rec["timestamp"]),
            text=rec["text"],
            parent_id=rec.get("parent_id"),
        )


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0
    per_community: Counter = field(default_factory=Counter)
    per_kind: Counter = field(default_factory=Counter)

    def merge(self, other: "IngestReport") -> "IngestReport":
        self.accepted += other.accepted
        self.rejected += other.rejected
        self.duplicates += other.duplicates
        self.per_community.update(other.per_community)
        self.per_kind.update(other.per_kind)
        return self


@dataclass
class SpanningSubset:
    """Oldest/newest slices of a hit list plus a sampled middle slice."""

    oldest: list[Document]
    newest: list[Document]
    middle_sample: list[Document]
    seed: int

    def all_docs(self) -> list[Document]:
        return self.oldest + self.middle_sample + self.newest

    def __len__(self) -> int:
        return len(self.oldest) + len(self.newest) + len(self.middle_sample)


def _strip_thing_prefix(raw: str) -> str:
    # Pushshift parent ids look like "t3_abc12" / "t1_def34"; post ids do not
    # carry the prefix, so strip it to make the parent join line up.
    if len(raw) > 3 and raw[0] == "t" and raw[1].isdigit() and raw[2] == "_":
        return raw[3:]
    return raw


def parse_reddit_record(rec: dict, match_fields: str = "title_body") -> Optional[Document]:
    """Build a Document from one Pushshift-style record, or None if invalid.

    Posts carry "title" (optionally "selftext"); comments carry "body".
    ``match_fields`` controls post text: "title_body" concatenates
    title+selftext, "title" keeps the title only.
    """
    doc_id = rec.get("id")
    community = rec.get("subreddit")
    created = rec.get("created_utc")
    if not doc_id or not community or created is None:
        return None
    try:
        timestamp = int(float(created))
    except (TypeError, ValueError):
        return None
    if timestamp <= 0:
        return None

    if "title" in rec:
        kind = "post"
        text = rec.get("title") or ""
        if match_fields == "title_body":
            selftext = rec.get("selftext") or ""
            if selftext:
                text = f"{text} {selftext}".strip()
        parent = None
    elif "body" in rec:
        kind = "comment"
        text = rec.get("body") or ""
        raw_parent = rec.get("parent_id")
        parent = _strip_thing_prefix(str(raw_parent)) if raw_parent else None
    else:
        return None

    if not text.strip():
        return None
    return Document(
        id=str(doc_id),
        platform="reddit",
        community=str(community),
        kind=kind,
        timestamp=timestamp,
        text=text,
        parent_id=parent,
    )


_TWITTER_TIME_FMT = "%a %b %d %H:%M:%S %z %Y"


def parse_twitter_record(rec: dict) -> Optional[Document]:
    """Build a Document from one streaming-API-style tweet record."""
    doc_id = rec.get("id_str") or rec.get("id")
    if doc_id is None:
        return None
    if "timestamp_ms" in rec:
        try:
            timestamp = int(int(rec["timestamp_ms"]) // 1000)
        except (TypeError, ValueError):
            return None
    elif "created_at" in rec:
        try:
            timestamp = int(datetime.strptime(rec["created_at"], _TWITTER_TIME_FMT).timestamp())
        except (TypeError, ValueError):
            return None
    else:
        return None
    if timestamp <= 0:
        return None
    text = rec.get("full_text") or rec.get("text") or ""
    if not text.strip():
        return None
    return Document(
        id=str(doc_id),
        platform="twitter",
        community="twitter",
        kind="tweet",
        timestamp=timestamp,
        text=text,
    )


class StoreSealedError(RuntimeError):
    pass


class DocumentStore:
    """Time-ordered, token-indexed collection of documents.

    Single-writer during ingestion; call :meth:`seal` when loading is done,
    after which queries are reproducible and reads may run concurrently.
    """

    def __init__(self) -> None:
        self._by_key: dict[tuple[str, str], Document] = {}
        self._tokens: dict[tuple[str, str], frozenset[str]] = {}
        self.token_index: dict[str, set[tuple[str, str]]] = {}
        self.community_index: dict[str, set[tuple[str, str]]] = {}
        self._sealed = False

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents())

    @property
    def sealed(self) -> bool:
        return self._sealed

    def seal(self) -> "DocumentStore":
        self._sealed = True
        return self

    def add(self, doc: Document) -> bool:
        """Add one document; returns False on duplicate (platform, id)."""
        if self._sealed:
            raise StoreSealedError("store is sealed; ingestion is closed")
        if doc.timestamp <= 0 or not doc.text.strip():
            raise ValueError(f"invalid document {doc.key}")
        if doc.key in self._by_key:
            return False
        self._by_key[doc.key] = doc
        toks = token_set(doc.text)
        self._tokens[doc.key] = toks
        for tok in toks:
            self.token_index.setdefault(tok, set()).add(doc.key)
        self.community_index.setdefault(doc.community, set()).add(doc.key)
        return True

    def ingest(self, path: str | Path, format: str, match_fields: str = "title_body") -> IngestReport:
        """Ingest one JSONL dump; malformed lines are counted, never fatal."""
        if format == "reddit_jsonl":
            parse = lambda rec: parse_reddit_record(rec, match_fields)
        elif format == "twitter_jsonl":
            parse = parse_twitter_record
        else:
            raise ValueError(f"unknown ingest format: {format!r}")

        report = IngestReport()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    report.rejected += 1
                    continue
                doc = parse(rec) if isinstance(rec, dict) else None
                if doc is None:
                    report.rejected += 1
                    continue
                if self.add(doc):
                    report.accepted += 1
                    report.per_community[doc.community] += 1
                    report.per_kind[doc.kind] += 1
                else:
                    report.duplicates += 1
        return report

    def documents(self) -> list[Document]:
        """All documents sorted by (timestamp, id)."""
        return sorted(self._by_key.values(), key=lambda d: (d.timestamp, d.id))

    def get(self, platform: str, doc_id: str) -> Optional[Document]:
        return self._by_key.get((platform, doc_id))

    def tokens_of(self, doc: Document) -> frozenset[str]:
        return self._tokens[doc.key]

    def doc_frequency(self, token: str) -> int:
        return len(self.token_index.get(token, ()))

    def counts(self) -> dict:
        per_kind: Counter = Counter(d.kind for d in self._by_key.values())
        per_community: Counter = Counter(d.community for d in self._by_key.values())
        return {
            "total": len(self._by_key),
            "per_kind": dict(sorted(per_kind.items())),
            "per_community": dict(sorted(per_community.items())),
        }

    def query(
        self,
        terms: Iterable[str],
        community: Optional[str] = None,
        time_range: Optional[tuple[int, int]] = None,
    ) -> list[Document]:
        """Documents whose token set contains ALL query terms.

        Terms are normalized before matching. Results are filtered by
        community and inclusive [start, end] time range, then sorted by
        (timestamp, id) for reproducibility.
        """
        normed: list[str] = []
        for term in terms:
            normed.extend(normalize(term))
        if not normed:
            raise ValueError("query requires at least one non-empty term")

        keys: Optional[set[tuple[str, str]]] = None
        for term in normed:
            posting = self.token_index.get(term)
            if not posting:
                return []
            keys = set(posting) if keys is None else keys & posting
            if not keys:
                return []
        assert keys is not None
        if community is not None:
            keys &= self.community_index.get(community, set())
        docs = [self._by_key[k] for k in keys]
        if time_range is not None:
            start, end = time_range
            docs = [d for d in docs if start <= d.timestamp <= end]
        docs.sort(key=lambda d: (d.timestamp, d.id))
        return docs

    def comments_under(self, post_ids: Iterable[str]) -> list[Document]:
        """Reddit comments whose parent_id is one of the given post ids."""
        wanted = set(post_ids)
        out = [
            d
            for d in self._by_key.values()
            if d.kind == "comment" and d.parent_id in wanted
        ]
        out.sort(key=lambda d: (d.timestamp, d.id))
        return out

    # Persistence: one file, version header line followed by one document
    # record per line.

    def save(self, path: str | Path) -> None:
        header = {
            "format": STORE_FORMAT,
            "version": STORE_VERSION,
            "count": len(self._by_key),
            "sealed": self._sealed,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for doc in self.documents():
                fh.write(json.dumps(doc.to_record(), sort_keys=True, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DocumentStore":
        store = cls()
        with open(path, "r", encoding="utf-8") as fh:
            header_line = fh.readline()
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"not a {STORE_FORMAT} file: {path}") from exc
            if header.get("format") != STORE_FORMAT:
                raise ValueError(f"not a {STORE_FORMAT} file: {path}")
            if header.get("version") != STORE_VERSION:
                raise ValueError(f"unsupported store version {header.get('version')}")
            for line in fh:
                line = line.strip()
                if line:
                    store.add(Document.from_record(json.loads(line)))
        if header.get("sealed"):
            store.seal()
        return store


def spanning_subset(
    hits: Sequence[Document],
    fractions: tuple[float, float, float] = (0.2, 0.2, 0.1),
    seed: int = 0,
) -> SpanningSubset:
    """Split time-ordered hits into oldest/newest slices plus a middle sample.

    ``fractions`` = (oldest, newest, middle-sample) shares. Oldest/newest use
    floor with a minimum of 1; the middle sample size uses ceiling and is
    drawn uniformly without replacement, deterministic for a given seed.
    Fewer than 10 hits degenerate to everything in ``oldest``.
    """
    n = len(hits)
    if n == 0:
        return SpanningSubset([], [], [], seed)
    if n < 10:
        return SpanningSubset(list(hits), [], [], seed)
    f_old, f_new, f_mid = fractions
    n_old = max(1, math.floor(f_old * n))
    n_new = max(1, min(math.floor(f_new * n), n - n_old))
    oldest = list(hits[:n_old])
    newest = list(hits[n - n_new:])
    pool = list(hits[n_old: n - n_new])
    m = min(math.ceil(f_mid * len(pool)), len(pool))
    if m > 0:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(pool), size=m, replace=False))
        middle = [pool[i] for i in idx]
    else:
        middle = []
    return SpanningSubset(oldest, newest, middle, seed)
