"""Per-claim, per-community skip-gram embeddings, orthogonal alignment of
model pairs over their shared vocabulary, and the averaged cross-community
keyword-similarity matrix.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import Document, normalize
from .features import WordVectors


@dataclass(frozen=True)
class SkipgramParams:
    dim: int = 100
    window: int = 5
    negative: int = 5
    epochs: int = 15
    min_count: int = 2
    lr: float = 0.025
    min_lr: float = 1e-4


@dataclass
class EmbeddingModel:
    claim_id: str
    community: str
    tokens: list[str]
    matrix: np.ndarray  # (V, dim)
    params: SkipgramParams
    seed: int
    normalized: bool = False
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._index:
            self._index = {tok: i for i, tok in enumerate(self.tokens)}
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("embedding matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def vector(self, token: str) -> np.ndarray:
        return self.matrix[self._index[token]]

    def vocab(self) -> dict[str, np.ndarray]:
        return {tok: self.matrix[i] for tok, i in self._index.items()}

    def as_word_vectors(self) -> WordVectors:
        return WordVectors(self.vocab())

    def save(self, path: str | Path) -> None:
        """Word2vec text format plus a JSON sidecar with training params."""
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.tokens)} {self.dim}\n")
            for i, tok in enumerate(self.tokens):
                comps = " ".join(repr(float(x)) for x in self.matrix[i])
                fh.write(f"{tok} {comps}\n")
        sidecar = {
            "claim_id": self.claim_id,
            "community": self.community,
            "params": asdict(self.params),
            "seed": self.seed,
            "normalized": self.normalized,
        }
        with open(path.with_suffix(path.suffix + ".meta.json"), "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingModel":
        path = Path(path)
        tokens: list[str] = []
        rows: list[list[float]] = []
        with open(path, "r", encoding="utf-8") as fh:
            count, dim = (int(x) for x in fh.readline().split())
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                tokens.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if len(tokens) != count or any(len(r) != dim for r in rows):
            raise ValueError(f"corrupt embedding file: {path}")
        meta_path = path.with_suffix(path.suffix + ".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        return cls(
            claim_id=meta.get("claim_id", ""),
            community=meta.get("community", ""),
            tokens=tokens,
            matrix=np.array(rows, dtype=np.float64),
            params=SkipgramParams(**meta["params"]) if "params" in meta else SkipgramParams(dim=dim),
            seed=meta.get("seed", 0),
            normalized=meta.get("normalized", False),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def _as_token_lists(docs: Iterable) -> list[list[str]]:
    out = []
    for doc in docs:
        if isinstance(doc, Document):
            out.append(normalize(doc.text))
        else:
            out.append(list(doc))
    return out


def train_skipgram(
    docs: Sequence,
    params: SkipgramParams | None = None,
    seed: int = 0,
    claim_id: str = "",
    community: str = "",
) -> EmbeddingModel:
    """Skip-gram with negative sampling over a small corpus.

    ``docs`` may be Documents (normalized here) or pre-tokenized lists.
    Plain SGD, one thread, learning rate decayed linearly over all
    (epoch, token) steps; the gradient for one center word is applied
    after its whole context block, which keeps updates deterministic for
    a fixed seed. Raises "insufficient corpus" when fewer than two tokens
    reach min_count.
    """
    p = params or SkipgramParams()
    sentences = _as_token_lists(docs)
    counts = Counter(tok for sent in sentences for tok in sent)
    vocab = [tok for tok, cnt in counts.items() if cnt >= p.min_count]
    vocab.sort(key=lambda t: (-counts[t], t))
    if len(vocab) < 2:
        raise ValueError("insufficient corpus: fewer than 2 tokens reach min_count")
    index = {tok: i for i, tok in enumerate(vocab)}
    encoded = [np.array([index[t] for t in sent if t in index], dtype=np.int64) for sent in sentences]
    encoded = [sent for sent in encoded if len(sent) >= 2]
    if not encoded:
        raise ValueError("insufficient corpus: no sentence with 2 in-vocabulary tokens")

    rng = np.random.default_rng(seed)
    V = len(vocab)
    w_in = (rng.random((V, p.dim)) - 0.5) / p.dim
    w_out = np.zeros((V, p.dim))

    freq = np.array([counts[t] for t in vocab], dtype=np.float64) ** 0.75
    neg_cdf = np.cumsum(freq / freq.sum())

    total_steps = p.epochs * sum(len(s) for s in encoded)
    step = 0
    for _ in range(p.epochs):
        for sent in encoded:
            n = len(sent)
            for i in range(n):
                lr = max(p.min_lr, p.lr * (1.0 - step / total_steps))
                step += 1
                b = int(rng.integers(1, p.window + 1))
                lo, hi = max(0, i - b), min(n, i + b + 1)
                ctx = np.concatenate([sent[lo:i], sent[i + 1: hi]])
                if len(ctx) == 0:
                    continue
                center = sent[i]
                negs = np.searchsorted(neg_cdf, rng.random(len(ctx) * p.negative))
                out_idx = np.concatenate([ctx, negs])
                y = np.zeros(len(out_idx))
                y[: len(ctx)] = 1.0

                v = w_in[center].copy()
                u = w_out[out_idx]
                g = _sigmoid(u @ v) - y
                grad_v = g @ u
                np.subtract.at(w_out, out_idx, lr * g[:, None] * v[None, :])
                w_in[center] -= lr * grad_v

    return EmbeddingModel(
        claim_id=claim_id,
        community=community,
        tokens=vocab,
        matrix=w_in,
        params=p,
        seed=seed,
    )


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def shared_vocabulary(a: EmbeddingModel, b: EmbeddingModel) -> list[str]:
    return sorted(set(a.tokens) & set(b.tokens))


def procrustes_align(source: EmbeddingModel, target: EmbeddingModel) -> np.ndarray:
    """Orthogonal Q minimizing ||S Q - T|| over the shared vocabulary.

    S and T stack the shared-vocab rows of source and target. Solved from
    the SVD of S^T T; Q^T Q = I to machine precision. Raises when the
    shared vocabulary has fewer tokens than the embedding dimension;
    warns (and proceeds) on rank-degenerate anchors.
    """
    if source.dim != target.dim:
        raise ValueError("embedding dimensions differ")
    shared = shared_vocabulary(source, target)
    if len(shared) < source.dim:
        raise ValueError(
            f"insufficient anchor vocabulary: {len(shared)} shared tokens < dimension {source.dim}"
        )
    S = np.stack([source.vector(t) for t in shared])
    T = np.stack([target.vector(t) for t in shared])
    M = S.T @ T
    U, svals, Vt = np.linalg.svd(M)
    if svals[0] > 0 and int(np.sum(svals > svals[0] * 1e-12)) < source.dim:
        warnings.warn("anchor matrix is rank degenerate; using SVD pseudo-solution")
    return U @ Vt


def keyword_similarity(
    a: EmbeddingModel,
    b: EmbeddingModel,
    keywords: Iterable[str],
) -> Optional[float]:
    """Mean cosine of each shared keyword after aligning b onto a.

    Returns None ("not comparable") when no keyword is present in both
    vocabularies; callers skip those entries when averaging.
    """
    present = [kw for kw in keywords if kw in a and kw in b]
    if not present:
        return None
    Q = procrustes_align(b, a)
    sims = [cosine(a.vector(kw), b.vector(kw) @ Q) for kw in present]
    return float(np.mean(sims))


@dataclass
class SimilarityMatrix:
    communities: list[str]
    values: np.ndarray  # (K, K); NaN where never comparable
    per_claim: dict[str, np.ndarray] = field(default_factory=dict)

    def entry(self, a: str, b: str) -> float:
        i, j = self.communities.index(a), self.communities.index(b)
        return float(self.values[i, j])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("community," + ",".join(self.communities) + "\n")
            for i, comm in enumerate(self.communities):
                cells = ["" if np.isnan(v) else repr(float(v)) for v in self.values[i]]
                fh.write(comm + "," + ",".join(cells) + "\n")


def similarity_matrix(
    models: Mapping[tuple[str, str], EmbeddingModel],
    keywords_by_claim: Mapping[str, Sequence[str]],
    communities: Sequence[str],
) -> SimilarityMatrix:
    """Average keyword similarity between community pairs across claims.

    ``models`` maps (claim_id, community) to a trained model. Each
    unordered pair is computed once and mirrored, so the matrix is exactly
    symmetric with a unit diagonal; pairs that are never comparable are
    NaN.
    """
    comms = list(communities)
    K = len(comms)
    claim_ids = sorted(keywords_by_claim)
    per_claim: dict[str, np.ndarray] = {cid: np.full((K, K), np.nan) for cid in claim_ids}
    values = np.full((K, K), np.nan)
    np.fill_diagonal(values, 1.0)

    for i in range(K):
        for j in range(i + 1, K):
            sims = []
            for cid in claim_ids:
                ma = models.get((cid, comms[i]))
                mb = models.get((cid, comms[j]))
                if ma is None or mb is None:
                    continue
                try:
                    sim = keyword_similarity(ma, mb, keywords_by_claim[cid])
                except ValueError:
                    sim = None  # insufficient shared vocabulary to align
                if sim is not None:
                    sims.append(sim)
                    per_claim[cid][i, j] = per_claim[cid][j, i] = sim
            if sims:
                values[i, j] = values[j, i] = float(np.mean(sims))

    for cid in claim_ids:
        np.fill_diagonal(per_claim[cid], 1.0)
    return SimilarityMatrix(communities=comms, values=values, per_claim=per_claim)
