"""Pluggable keyword-extraction baselines for the comparison harness.

A baseline is anything with a ``name`` attribute and an
``extract(claim) -> tuple[str, ...]`` method.
"""

from __future__ import annotations

from typing import Optional

from ..claims import Claim, _claim_tfidf, preprocess
from ..corpus import DocumentStore


class FirstTokensBaseline:
    """Naive: the first k cleaned claim tokens."""

    def __init__(self, k: int = 2):
        self.k = k
        self.name = f"first_{k}_tokens"

    def extract(self, claim: Claim) -> tuple[str, ...]:
        unique = list(dict.fromkeys(preprocess(claim.title)))
        return tuple(unique[: self.k])


class TfidfTokensBaseline:
    """Statistical: the k claim tokens with the highest tf-idf."""

    def __init__(self, k: int = 2, store: Optional[DocumentStore] = None):
        self.k = k
        self.store = store
        self.name = f"tfidf_top_{k}"

    def extract(self, claim: Claim) -> tuple[str, ...]:
        tokens = preprocess(claim.title)
        if not tokens:
            return ()
        scores = _claim_tfidf(tokens, self.store)
        unique = list(dict.fromkeys(tokens))
        ranked = sorted(unique, key=lambda t: (-scores[t], t))
        return tuple(sorted(ranked[: self.k], key=unique.index))
