"""Lifespan, toxicity scoring, and distribution-comparison analytics over
extracted discussion corpora.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
import requests

from .corpus import Document, DocumentStore

DAYS_PER_MONTH = 30.44  # mean Gregorian month
SECONDS_PER_MONTH = DAYS_PER_MONTH * 86400.0

# The six comparisons reported for toxicity distributions, by group name.
CANONICAL_COMPARISONS = (
    ("conspiracy_posts", "baseline_posts"),
    ("conspiracy_comments", "baseline_comments"),
    ("conspiracy_posts", "conspiracy_comments"),
    ("conspiracy_comments", "submission_comments"),
    ("conspiracy_posts", "tweets"),
    ("conspiracy_comments", "tweets"),
)


def lifespan(docs: Sequence[Document]) -> float:
    """Months between the earliest and latest matched document."""
    if not docs:
        raise ValueError("lifespan requires at least one document")
    ts = [d.timestamp for d in docs]
    return (max(ts) - min(ts)) / SECONDS_PER_MONTH


def lifespan_by_platform(docs: Sequence[Document]) -> dict[str, float]:
    per: dict[str, list[Document]] = {}
    for d in docs:
        per.setdefault(d.platform, []).append(d)
    return {platform: lifespan(group) for platform, group in sorted(per.items())}


def ccdf_at(values: Sequence[float], x: float) -> float:
    """Fraction of values strictly greater than x."""
    if not len(values):
        raise ValueError("empty sample")
    arr = np.asarray(values, dtype=np.float64)
    return float((arr > x).mean())


def ccdf_table(values: Sequence[float]) -> list[tuple[float, float]]:
    """(x, P(X > x)) at each distinct sample value, ascending."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    out = []
    for x in np.unique(arr):
        out.append((float(x), float((arr > x).mean())))
    return out


@dataclass(frozen=True)
class ToxicityScore:
    doc_id: str
    score: float
    model: str = "SEVERE_TOXICITY"
    source: str = "stub"  # "remote" | "stub" | "cached"

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass
class ScoringConfig:
    mode: str = "stub"  # "stub" | "remote"
    endpoint: str = "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze"
    api_key_env: str = "PERSPECTIVE_API_KEY"
    model: str = "SEVERE_TOXICITY"
    rate_limit: float = 1.0  # requests per second
    max_retries: int = 5
    backoff_base: float = 1.0
    timeout: float = 10.0
    cache_path: Optional[str] = None


def _text_key(text: str, model: str) -> str:
    return hashlib.sha256(f"{model}\0{text}".encode("utf-8")).hexdigest()


def _stub_score(text: str, model: str) -> float:
    digest = hashlib.sha256(f"{model}\0{text}".encode("utf-8")).digest()
    return int.from_bytes(digest[:6], "big") / float(1 << 48)


class ScoringClient:
    """Rate-limited, disk-cached client for a Perspective-style endpoint.

    Stub mode derives a deterministic score from the text hash, which keeps
    the full pipeline runnable offline. Failed documents are reported as
    unscored, never given a made-up score. ``clock``/``sleep`` are
    injectable so throttling is testable without wall time.
    """

    def __init__(
        self,
        config: ScoringConfig,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        session: Optional[requests.Session] = None,
    ):
        self.config = config
        self._clock = clock
        self._sleep = sleep
        self._session = session or requests.Session()
        self._last_request: Optional[float] = None
        self._cache: dict[str, float] = {}
        if config.cache_path and os.path.exists(config.cache_path):
            with open(config.cache_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rec = json.loads(line)
                        self._cache[rec["key"]] = float(rec["score"])

    def _cache_put(self, key: str, score: float) -> None:
        self._cache[key] = score
        if self.config.cache_path:
            with open(self.config.cache_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "model": self.config.model, "score": score}) + "\n")

    def _throttle(self) -> None:
        if self.config.rate_limit <= 0:
            return
        min_interval = 1.0 / self.config.rate_limit
        now = self._clock()
        if self._last_request is not None:
            wait = self._last_request + min_interval - now
            if wait > 0:
                self._sleep(wait)
                now = self._clock()
        self._last_request = now

    def _score_remote(self, text: str) -> Optional[float]:
        api_key = os.environ.get(self.config.api_key_env, "")
        url = f"{self.config.endpoint}?key={api_key}" if api_key else self.config.endpoint
        body = {
            "comment": {"text": text},
            "requestedAttributes": {self.config.model: {}},
        }
        for attempt in range(self.config.max_retries):
            self._throttle()
            try:
                resp = self._session.post(url, json=body, timeout=self.config.timeout)
                if resp.status_code == 429 or resp.status_code >= 500:
                    self._sleep(self.config.backoff_base * 2**attempt)
                    continue
                resp.raise_for_status()
                payload = resp.json()
                return float(payload["attributeScores"][self.config.model]["summaryScore"]["value"])
            except (requests.RequestException, KeyError, ValueError):
                self._sleep(self.config.backoff_base * 2**attempt)
        return None

    def score(self, docs: Sequence[Document]) -> tuple[list[ToxicityScore], list[str]]:
        """Score documents; returns (scores, unscored doc ids)."""
        scores: list[ToxicityScore] = []
        unscored: list[str] = []
        for doc in docs:
            key = _text_key(doc.text, self.config.model)
            if key in self._cache:
                scores.append(ToxicityScore(doc.id, self._cache[key], self.config.model, "cached"))
                continue
            if self.config.mode == "stub":
                value = _stub_score(doc.text, self.config.model)
                self._cache_put(key, value)
                scores.append(ToxicityScore(doc.id, value, self.config.model, "stub"))
            elif self.config.mode == "remote":
                value = self._score_remote(doc.text)
                if value is None:
                    unscored.append(doc.id)
                else:
                    self._cache_put(key, value)
                    scores.append(ToxicityScore(doc.id, value, self.config.model, "remote"))
            else:
                raise ValueError(f"unknown scoring mode: {self.config.mode!r}")
        return scores, unscored


def score_toxicity(
    docs: Sequence[Document],
    config: ScoringConfig,
    **client_kwargs,
) -> tuple[list[ToxicityScore], list[str]]:
    return ScoringClient(config, **client_kwargs).score(docs)


@dataclass(frozen=True)
class KsResult:
    d_statistic: float
    p_value: float
    n1: int
    n2: int


def _kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function Q(lam) = 2 sum (-1)^(k-1) exp(-2 k^2 lam^2)."""
    if lam <= 0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-18:
            break
    return min(max(total, 5e-324), 1.0)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> KsResult:
    """Two-sample KS test: exact D from the empirical CDFs, asymptotic p.

    p uses the Kolmogorov limit distribution with effective sample size
    n1*n2/(n1+n2).
    """
    x1 = np.sort(np.asarray(a, dtype=np.float64))
    x2 = np.sort(np.asarray(b, dtype=np.float64))
    n1, n2 = len(x1), len(x2)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    grid = np.concatenate([x1, x2])
    f1 = np.searchsorted(x1, grid, side="right") / n1
    f2 = np.searchsorted(x2, grid, side="right") / n2
    d = float(np.max(np.abs(f1 - f2)))
    n_eff = n1 * n2 / (n1 + n2)
    p = _kolmogorov_sf(math.sqrt(n_eff) * d)
    return KsResult(d_statistic=d, p_value=p, n1=n1, n2=n2)


@dataclass
class DistributionReport:
    grid: np.ndarray
    cdf: dict[str, np.ndarray]
    ks_table: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "grid": [float(x) for x in self.grid],
            "cdf": {name: [float(v) for v in vals] for name, vals in sorted(self.cdf.items())},
            "ks_table": self.ks_table,
        }


def emit_distributions(
    groups: Mapping[str, Sequence[float]],
    points: int = 1000,
    flagged_pairs: Sequence[tuple[str, str]] = CANONICAL_COMPARISONS,
) -> DistributionReport:
    """Per-group CDF tables on a shared grid plus the pairwise KS table.

    The grid spans the pooled sample range with ``points`` even steps, so
    every CDF is non-decreasing and ends at 1. Pairs matching
    ``flagged_pairs`` (the named comparisons) are marked in the table.
    """
    if not groups:
        raise ValueError("at least one group required")
    pooled = np.concatenate([np.asarray(v, dtype=np.float64) for v in groups.values()])
    if len(pooled) == 0:
        raise ValueError("all groups empty")
    lo, hi = float(pooled.min()), float(pooled.max())
    if lo == hi:
        hi = lo + 1.0
    grid = np.linspace(lo, hi, points)

    cdf: dict[str, np.ndarray] = {}
    for name, values in groups.items():
        arr = np.sort(np.asarray(values, dtype=np.float64))
        cdf[name] = np.searchsorted(arr, grid, side="right") / len(arr)

    flagged = {frozenset(pair) for pair in flagged_pairs}
    names = sorted(groups)
    ks_table = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if not len(groups[a]) or not len(groups[b]):
                continue
            res = ks_two_sample(groups[a], groups[b])
            ks_table.append(
                {
                    "a": a,
                    "b": b,
                    "d": res.d_statistic,
                    "p": res.p_value,
                    "n1": res.n1,
                    "n2": res.n2,
                    "flagged": frozenset((a, b)) in flagged,
                }
            )
    return DistributionReport(grid=grid, cdf=cdf, ks_table=ks_table)


def sample_baseline(
    store: DocumentStore,
    communities: Iterable[str],
    kind: str,
    n: int,
    seed: int = 0,
    exclude_ids: Iterable[tuple[str, str]] = (),
) -> list[Document]:
    """Seeded uniform sample (without replacement) of non-matched documents.

    Pulls from the given communities and document kind, excluding the
    supplied (platform, id) keys; used to build the comparison baseline of
    the toxicity analysis.
    """
    excluded = set(exclude_ids)
    wanted = set(communities)
    pool = [
        d
        for d in store.documents()
        if d.community in wanted and d.kind == kind and d.key not in excluded
    ]
    if len(pool) <= n:
        return pool
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(pool), size=n, replace=False))
    return [pool[i] for i in idx]
