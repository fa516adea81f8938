"""Ranking dataset assembly and the line-oriented LETOR-style text format.

One query group per claim; each row is a candidate keyword query with its
7-dim feature vector and a binary relevance label. The text format is
`<label> qid:<n> 1:<f1> ... 7:<f7> # <claim_id>|<terms>` and round-trips
bit-exactly (floats serialized with shortest round-trip repr).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..claims import CandidateQuery, Claim, GroundTruthLabel, candidate_queries
from ..corpus import DocumentStore
from ..features import FeatureVector, WordVectors, extract_features

FEATURE_DIM = 7


@dataclass(frozen=True)
class Row:
    features: tuple[float, ...]  # length 7
    label: int  # 0 | 1
    terms: tuple[str, ...]

    def feature_array(self) -> np.ndarray:
        return np.asarray(self.features, dtype=np.float64)


@dataclass
class QueryGroup:
    qid: str  # claim id
    rows: list[Row]

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=np.int64)

    def feature_matrix(self) -> np.ndarray:
        return np.array([r.features for r in self.rows], dtype=np.float64)

    def has_signal(self) -> bool:
        labels = {r.label for r in self.rows}
        return labels == {0, 1}


@dataclass
class RankingDataset:
    groups: list[QueryGroup] = field(default_factory=list)

    def __post_init__(self) -> None:
        for group in self.groups:
            if not group.rows:
                raise ValueError(f"group {group.qid!r} has no rows")
            for row in group.rows:
                if len(row.features) != FEATURE_DIM:
                    raise ValueError(f"group {group.qid!r}: feature dim {len(row.features)} != {FEATURE_DIM}")
                if row.label not in (0, 1):
                    raise ValueError(f"group {group.qid!r}: label must be binary, got {row.label}")

    def __len__(self) -> int:
        return len(self.groups)

    def all_rows(self) -> list[Row]:
        return [row for group in self.groups for row in group.rows]


def standardize_stats(groups: Iterable[QueryGroup]) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and std over all rows; zero stds become 1.

    Sentinel values (-1) participate as real values: "too few hits" is
    informative for the distance computations downstream.
    """
    X = np.vstack([g.feature_matrix() for g in groups])
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0.0] = 1.0
    return means, stds


def assemble(
    claims: Sequence[Claim],
    labels: Iterable[GroundTruthLabel],
    store: DocumentStore,
    vectors: WordVectors,
    mode: str = "combinations",
    cap: int = 100,
    seed: int = 0,
    letor_path: Optional[str | Path] = None,
    features_by_terms: Optional[dict[tuple[str, frozenset[str]], FeatureVector]] = None,
) -> RankingDataset:
    """Build one query group per claim from candidates plus labels.

    Every generated candidate becomes a row; annotated queries absent from
    the candidate list are added so positives are never lost. Claims
    without a positive label (or without candidates) are dropped with a
    warning. ``features_by_terms`` short-circuits feature extraction with
    precomputed vectors keyed by (claim_id, frozenset(terms)).
    """
    by_claim: dict[str, dict[frozenset[str], bool]] = {}
    for label in labels:
        by_claim.setdefault(label.claim_id, {})[frozenset(label.terms)] = bool(label.relevant)

    groups: list[QueryGroup] = []
    for claim in claims:
        claim_labels = by_claim.get(claim.id, {})
        if not any(claim_labels.values()):
            warnings.warn(f"claim {claim.id!r}: no positive label, excluded from dataset")
            continue
        cands = candidate_queries(claim, mode=mode, cap=cap, store=store)
        if not cands:
            warnings.warn(f"claim {claim.id!r}: no candidates, excluded from dataset")
            continue
        present = {c.term_set() for c in cands}
        for term_set in sorted(claim_labels, key=sorted):
            if term_set not in present:
                cands.append(CandidateQuery(claim.id, tuple(sorted(term_set)), source="annotated"))

        rows = []
        for cand in cands:
            key = (claim.id, cand.term_set())
            if features_by_terms is not None and key in features_by_terms:
                fvec = features_by_terms[key]
            else:
                fvec = extract_features(cand, claim, store, vectors, seed=seed)
            label = 1 if claim_labels.get(cand.term_set(), False) else 0
            rows.append(Row(features=tuple(fvec.as_array()), label=label, terms=cand.terms))
        groups.append(QueryGroup(qid=claim.id, rows=rows))

    dataset = RankingDataset(groups)
    if letor_path is not None:
        write_letor(dataset, letor_path)
    return dataset


def write_letor(dataset: RankingDataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for idx, group in enumerate(dataset.groups, start=1):
            for row in group.rows:
                feats = " ".join(f"{k + 1}:{float(v)!r}" for k, v in enumerate(row.features))
                terms = " ".join(row.terms)
                fh.write(f"{row.label} qid:{idx} {feats} # {group.qid}|{terms}\n")


def read_letor(path: str | Path) -> RankingDataset:
    groups: dict[str, QueryGroup] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            body, _, comment = line.partition(" # ")
            claim_id, _, terms_str = comment.partition("|")
            parts = body.split()
            label = int(parts[0])
            if not parts[1].startswith("qid:"):
                raise ValueError(f"malformed LETOR line: {line!r}")
            feats = []
            for k, item in enumerate(parts[2:], start=1):
                key, _, val = item.partition(":")
                if int(key) != k:
                    raise ValueError(f"feature index {key} out of order in line: {line!r}")
                feats.append(float(val))
            row = Row(features=tuple(feats), label=label, terms=tuple(terms_str.split()))
            if claim_id not in groups:
                groups[claim_id] = QueryGroup(qid=claim_id, rows=[])
                order.append(claim_id)
            groups[claim_id].rows.append(row)
    return RankingDataset([groups[cid] for cid in order])
