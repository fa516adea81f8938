"""The seven ranking features computed for a candidate query from its
retrieval results: hit count, four embedding-similarity statistics over a
time-spanning subset of the hits, and keyword graph/frequency scores.

Document similarity uses optimal-transport distance between bag-of-words
histograms in a word-vector space, mapped to (0, 1] via 1/(1+distance).
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .claims import Claim, CandidateQuery
from .corpus import DocumentStore, SpanningSubset, normalize, spanning_subset

SENTINEL = -1.0

# Above this many unique in-vocabulary tokens per side the exact transport
# solve is replaced by the relaxed lower bound ("auto" method).
EXACT_WMD_MAX_TOKENS = 25


class EmptyAfterOOVError(ValueError):
    """Neither document retains an in-vocabulary token."""


@dataclass(frozen=True)
class FeatureVector:
    f1_hit_count: float
    f2_median_pairwise_sim: float
    f3_median_claim_sim: float
    f4_mean_pairwise_sim: float
    f5_mean_claim_sim: float
    f6_median_textrank: float
    f7_median_tfidf: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.f1_hit_count,
                self.f2_median_pairwise_sim,
                self.f3_median_claim_sim,
                self.f4_mean_pairwise_sim,
                self.f5_mean_claim_sim,
                self.f6_median_textrank,
                self.f7_median_tfidf,
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "FeatureVector":
        if len(arr) != 7:
            raise ValueError(f"feature vector must have 7 dimensions, got {len(arr)}")
        return cls(*(float(x) for x in arr))


class WordVectors:
    """Token -> dense vector map with a fixed dimension."""

    def __init__(self, vocab: Mapping[str, Sequence[float]]):
        if not vocab:
            raise ValueError("empty vocabulary")
        self.vocab: dict[str, np.ndarray] = {}
        dim: Optional[int] = None
        for tok, vec in vocab.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"vector for {tok!r} is not 1-d")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise ValueError(f"vector for {tok!r} has dimension {arr.shape[0]}, expected {dim}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {tok!r} has non-finite components")
            self.vocab[tok] = arr
        assert dim is not None
        self.dimension = dim

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vocab[token]

    def __len__(self) -> int:
        return len(self.vocab)

    def save(self, path: str | Path) -> None:
        """Write word2vec text format: header "V d", then one token per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.vocab)} {self.dimension}\n")
            for tok in self.vocab:
                comps = " ".join(repr(float(x)) for x in self.vocab[tok])
                fh.write(f"{tok} {comps}\n")

    @classmethod
    def load(cls, path: str | Path) -> "WordVectors":
        vocab: dict[str, list[float]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"bad word2vec text header in {path}")
            count, dim = int(header[0]), int(header[1])
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise ValueError(f"bad vector line for token {parts[0]!r}")
                vocab[parts[0]] = [float(x) for x in parts[1:]]
        if len(vocab) != count:
            raise ValueError(f"header promised {count} vectors, file has {len(vocab)}")
        return cls(vocab)


def _histogram(tokens: Iterable[str], vectors: WordVectors) -> tuple[list[str], np.ndarray]:
    counts = Counter(tok for tok in tokens if tok in vectors)
    if not counts:
        return [], np.zeros(0)
    toks = sorted(counts)
    weights = np.array([counts[t] for t in toks], dtype=np.float64)
    return toks, weights / weights.sum()


def _cost_matrix(toks_a: list[str], toks_b: list[str], vectors: WordVectors) -> np.ndarray:
    A = np.stack([vectors[t] for t in toks_a])
    B = np.stack([vectors[t] for t in toks_b])
    diff = A[:, None, :] - B[None, :, :]
    return np.sqrt(np.maximum((diff * diff).sum(axis=2), 0.0))


def _transport_cost(cost: np.ndarray, wa: np.ndarray, wb: np.ndarray) -> float:
    """Minimum-cost transport between histograms wa and wb (LP solve)."""
    m, n = cost.shape
    if m == 1:
        return float(cost[0] @ wb)
    if n == 1:
        return float(wa @ cost[:, 0])
    # Equality rows: m supplies plus n-1 demands (last demand is redundant).
    n_vars = m * n
    rows = []
    rhs = []
    for i in range(m):
        row = np.zeros(n_vars)
        row[i * n: (i + 1) * n] = 1.0
        rows.append(row)
        rhs.append(wa[i])
    for j in range(n - 1):
        row = np.zeros(n_vars)
        row[j::n] = 1.0
        rows.append(row)
        rhs.append(wb[j])
    res = linprog(
        cost.ravel(),
        A_eq=np.array(rows),
        b_eq=np.array(rhs),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return max(float(res.fun), 0.0)


def wmd(
    doc_a: Sequence[str],
    doc_b: Sequence[str],
    vectors: WordVectors,
    method: str = "exact",
) -> float:
    """Word-level optimal-transport distance between two token multisets.

    ``exact`` solves the transportation problem between the normalized
    bag-of-words histograms with Euclidean ground distance. ``relaxed``
    returns the max of the two one-sided lower bounds (each word's mass
    moved to its nearest counterpart), which never exceeds the exact value.
    Out-of-vocabulary tokens are dropped first.
    """
    toks_a, wa = _histogram(doc_a, vectors)
    toks_b, wb = _histogram(doc_b, vectors)
    if not toks_a or not toks_b:
        raise EmptyAfterOOVError("empty-after-OOV")
    if toks_a == toks_b and np.array_equal(wa, wb):
        return 0.0
    cost = _cost_matrix(toks_a, toks_b, vectors)
    if method == "exact":
        return _transport_cost(cost, wa, wb)
    if method == "relaxed":
        bound_a = float(wa @ cost.min(axis=1))
        bound_b = float(wb @ cost.min(axis=0))
        return max(bound_a, bound_b)
    if method == "auto":
        if len(toks_a) <= EXACT_WMD_MAX_TOKENS and len(toks_b) <= EXACT_WMD_MAX_TOKENS:
            return _transport_cost(cost, wa, wb)
        bound_a = float(wa @ cost.min(axis=1))
        bound_b = float(wb @ cost.min(axis=0))
        return max(bound_a, bound_b)
    raise ValueError(f"unknown wmd method: {method!r}")


def similarity(doc_a: Sequence[str], doc_b: Sequence[str], vectors: WordVectors, method: str = "exact") -> float:
    """Bounded similarity in (0, 1]: 1/(1 + transport distance)."""
    return 1.0 / (1.0 + wmd(doc_a, doc_b, vectors, method))


def similarity_stats(
    subset: SpanningSubset,
    claim_tokens: Sequence[str],
    vectors: WordVectors,
    method: str = "auto",
) -> tuple[float, float, float, float]:
    """(f2, f3, f4, f5): median/mean pairwise and doc-vs-claim similarities.

    Documents with no in-vocabulary token are ignored. Statistics that are
    undefined (fewer than 2 usable docs for pairwise, no usable doc or
    fully out-of-vocabulary claim for the claim side) come back as the
    sentinel -1.
    """
    doc_tokens = []
    for doc in subset.all_docs():
        toks = [t for t in normalize(doc.text) if t in vectors]
        if toks:
            doc_tokens.append(toks)
    claim_in_vocab = [t for t in claim_tokens if t in vectors]

    if len(doc_tokens) >= 2:
        pair_sims = [
            similarity(doc_tokens[i], doc_tokens[j], vectors, method)
            for i in range(len(doc_tokens))
            for j in range(i + 1, len(doc_tokens))
        ]
        f2 = float(np.median(pair_sims))
        f4 = float(np.mean(pair_sims))
    else:
        f2 = f4 = SENTINEL

    if doc_tokens and claim_in_vocab:
        claim_sims = [similarity(toks, claim_in_vocab, vectors, method) for toks in doc_tokens]
        f3 = float(np.median(claim_sims))
        f5 = float(np.mean(claim_sims))
    else:
        f3 = f5 = SENTINEL
    return f2, f3, f4, f5


def textrank_scores(
    tokens: Sequence[str],
    window: int = 2,
    damping: float = 0.85,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> dict[str, float]:
    """Keyword scores from an undirected co-occurrence graph.

    Tokens co-occur when their positions are less than ``window`` apart.
    Scores iterate s(v) = (1-d) + d * sum_{u in N(v)} s(u)/deg(u) until the
    largest change drops below ``tol``. Isolated tokens settle at 1-d.
    """
    if not tokens:
        raise ValueError("textrank requires at least one token")
    order = list(dict.fromkeys(tokens))
    index = {tok: i for i, tok in enumerate(order)}
    n = len(order)
    neighbors: list[set[int]] = [set() for _ in range(n)]
    for i, tok in enumerate(tokens):
        for j in range(i + 1, min(i + window, len(tokens))):
            a, b = index[tok], index[tokens[j]]
            if a != b:
                neighbors[a].add(b)
                neighbors[b].add(a)

    scores = np.ones(n)
    for _ in range(max_iters):
        new_scores = np.empty(n)
        for v in range(n):
            acc = 0.0
            for u in neighbors[v]:
                acc += scores[u] / len(neighbors[u])
            new_scores[v] = (1.0 - damping) + damping * acc
        delta = float(np.max(np.abs(new_scores - scores)))
        scores = new_scores
        if delta < tol:
            break
    return {tok: float(scores[index[tok]]) for tok in order}


def tfidf_scores(
    terms: Iterable[str],
    claim_tokens: Sequence[str],
    store: DocumentStore,
) -> dict[str, float]:
    """tf from the claim, smoothed idf from the document store.

    tf = occurrences in claim / claim length; idf = ln((1+N)/(1+df)) + 1.
    A term present in every document gets idf exactly 1.
    """
    counts = Counter(claim_tokens)
    total = len(claim_tokens)
    n_docs = len(store)
    out: dict[str, float] = {}
    for term in terms:
        tf = (counts[term] / total) if total else 0.0
        df = store.doc_frequency(term)
        idf = math.log((1 + n_docs) / (1 + df)) + 1.0
        out[term] = tf * idf
    return out


def extract_features(
    candidate: CandidateQuery,
    claim: Claim,
    store: DocumentStore,
    vectors: WordVectors,
    seed: int = 0,
    fractions: tuple[float, float, float] = (0.2, 0.2, 0.1),
    method: str = "auto",
) -> FeatureVector:
    """Featurize one candidate query against a sealed store.

    Runs the query, takes the time-spanning subset of hits, and fills the
    seven features in their documented order. Pure given (store, vectors,
    seed); undefined statistics use the sentinel -1.
    """
    if not store.sealed:
        warnings.warn("featurizing against an unsealed store; results may not be reproducible")
    claim_tokens = claim.tokens()
    hits = store.query(candidate.terms)
    subset = spanning_subset(hits, fractions, seed)
    f2, f3, f4, f5 = similarity_stats(subset, claim_tokens, vectors, method)

    if claim_tokens:
        ranks = textrank_scores(claim_tokens)
        f6 = float(np.median([ranks.get(t, 0.0) for t in candidate.terms]))
        tfidf = tfidf_scores(candidate.terms, claim_tokens, store)
        f7 = float(np.median([tfidf[t] for t in candidate.terms]))
    else:
        f6 = f7 = 0.0

    return FeatureVector(
        f1_hit_count=float(len(hits)),
        f2_median_pairwise_sim=f2,
        f3_median_claim_sim=f3,
        f4_mean_pairwise_sim=f4,
        f5_mean_claim_sim=f5,
        f6_median_textrank=f6,
        f7_median_tfidf=f7,
    )
