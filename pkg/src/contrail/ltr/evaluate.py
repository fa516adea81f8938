"""MAP evaluation, claim-level cross-validation, grid search, keyword
selection, and comparison against pluggable baseline extractors."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import asdict
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ..claims import CandidateQuery, Claim, candidate_queries
from ..corpus import DocumentStore
from ..features import WordVectors, extract_features
from .dataset import QueryGroup, RankingDataset, Row, standardize_stats
from .lambdamart import Hyperparams, RankerModel, train
from .nearmiss import nearmiss3


def average_precision(rel_in_rank_order: Sequence[int]) -> float:
    """AP of a binary ranking: mean of precision@k over relevant ranks.

    Summation runs in ascending rank order with a single final division,
    so independent implementations that follow the definition verbatim
    produce the identical float.
    """
    n_pos = sum(1 for r in rel_in_rank_order if r)
    if n_pos == 0:
        raise ValueError("average precision undefined without a positive")
    hits = 0
    total = 0.0
    for k, r in enumerate(rel_in_rank_order, start=1):
        if r:
            hits += 1
            total += hits / k
    return total / n_pos


def rank_group(model: RankerModel, group: QueryGroup) -> list[Row]:
    """Rows ordered by model score descending, ties by lexical terms."""
    scores = model.score(group.feature_matrix())
    order = sorted(range(len(group.rows)), key=lambda i: (-scores[i], group.rows[i].terms))
    return [group.rows[i] for i in order]


def mean_average_precision(model: RankerModel, dataset: RankingDataset) -> float:
    aps = []
    for group in dataset.groups:
        if not any(row.label == 1 for row in group.rows):
            warnings.warn(f"group {group.qid!r} has no positive row, excluded from MAP")
            continue
        ranked = rank_group(model, group)
        aps.append(average_precision([row.label for row in ranked]))
    if not aps:
        raise ValueError("no group with a positive label")
    return float(np.mean(aps))


def kfold_partition(n_groups: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Disjoint group-index folds covering every group exactly once."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_groups)
    return [np.sort(fold) for fold in np.array_split(perm, k)]


def cross_validate(
    dataset: RankingDataset,
    k: int = 5,
    hyperparams: Hyperparams | dict | None = None,
    seed: int = 0,
    shortlist_m: int = 3,
    nm_k: int = 3,
) -> dict:
    """Claim-level k-fold CV; NearMiss-3 applied to training folds only.

    Feature standardization for the NearMiss distances is fitted on each
    training fold. Held-out groups are evaluated raw.
    """
    n = len(dataset.groups)
    if k > n:
        raise ValueError(f"k={k} exceeds group count {n}")
    if k < 2:
        raise ValueError("k must be at least 2")
    folds = kfold_partition(n, k, seed)
    fold_maps: list[float] = []
    for test_idx in folds:
        test_set = set(int(i) for i in test_idx)
        train_raw = [dataset.groups[i] for i in range(n) if i not in test_set]
        means, stds = standardize_stats(train_raw)
        train_groups = [
            nearmiss3(g, shortlist_m, nm_k, means, stds) if g.has_signal() else g
            for g in train_raw
        ]
        model = train(RankingDataset(train_groups), hyperparams, seed=seed)
        test_ds = RankingDataset([dataset.groups[i] for i in sorted(test_set)])
        fold_maps.append(mean_average_precision(model, test_ds))
    return {"fold_maps": fold_maps, "mean_map": float(np.mean(fold_maps))}


def grid_search(
    dataset: RankingDataset,
    grid: Mapping[str, Sequence],
    k: int = 5,
    seed: int = 0,
) -> tuple[Hyperparams, list[dict]]:
    """Exhaustive CV over the grid; best by mean MAP, ties to smaller models.

    Tie order: fewer total trees, then fewer leaves, then first in grid
    iteration order (sorted keys, row-major).
    """
    if not grid:
        raise ValueError("empty grid")
    keys = sorted(grid)
    table: list[dict] = []
    best: Optional[tuple[float, int, int, Hyperparams]] = None
    for values in itertools.product(*(grid[key] for key in keys)):
        hp = Hyperparams(**{**asdict(Hyperparams()), **dict(zip(keys, values))})
        result = cross_validate(dataset, k=k, hyperparams=hp, seed=seed)
        table.append({**dict(zip(keys, values)), "mean_map": result["mean_map"], "fold_maps": result["fold_maps"]})
        cand = (result["mean_map"], -hp.total_trees(), -hp.num_leaves, hp)
        if best is None or cand[:3] > best[:3]:
            best = cand
    assert best is not None
    return best[3], table


def select_keywords(
    model: RankerModel,
    claim: Claim,
    store: DocumentStore,
    vectors: WordVectors,
    mode: str = "combinations",
    cap: int = 100,
    seed: int = 0,
    method: str = "auto",
) -> list[tuple[CandidateQuery, float]]:
    """Candidates ranked by model score (descending, lexical tie-break).

    The top entry is the extraction query; the full ranking is returned
    for audit. Works against any sealed store, so a model trained on one
    platform can rank candidates featurized from another.
    """
    cands = candidate_queries(claim, mode=mode, cap=cap, store=store)
    if not cands:
        return []
    X = np.vstack(
        [extract_features(c, claim, store, vectors, seed=seed, method=method).as_array() for c in cands]
    )
    scores = model.score(X)
    order = sorted(range(len(cands)), key=lambda i: (-scores[i], cands[i].terms))
    return [(cands[i], float(scores[i])) for i in order]


def baseline_compare(
    claims: Sequence[Claim],
    relevant_sets: Mapping[str, Iterable[frozenset[str]]],
    store: DocumentStore,
    vectors: WordVectors,
    model: RankerModel,
    baselines: Sequence = (),
    mode: str = "combinations",
    cap: int = 100,
    seed: int = 0,
) -> list[dict]:
    """Percent of claims where each method's top query is labeled relevant.

    ``relevant_sets`` maps claim id to its annotated-relevant term sets.
    Baselines are objects with a ``name`` and ``extract(claim) -> terms``.
    The ranker row always comes first.
    """
    evaluated = [c for c in claims if list(relevant_sets.get(c.id, ()))]
    if not evaluated:
        raise ValueError("no claim with a relevant label to evaluate")

    def is_valid(claim: Claim, terms: Iterable[str]) -> bool:
        return frozenset(terms) in set(map(frozenset, relevant_sets[claim.id]))

    rows = []
    ltr_hits = 0
    for claim in evaluated:
        ranked = select_keywords(model, claim, store, vectors, mode=mode, cap=cap, seed=seed)
        if ranked and is_valid(claim, ranked[0][0].terms):
            ltr_hits += 1
    rows.append({"method": "ltr", "valid_pct": 100.0 * ltr_hits / len(evaluated), "n_claims": len(evaluated)})

    for baseline in baselines:
        hits = 0
        for claim in evaluated:
            terms = baseline.extract(claim)
            if terms and is_valid(claim, terms):
                hits += 1
        rows.append({"method": baseline.name, "valid_pct": 100.0 * hits / len(evaluated), "n_claims": len(evaluated)})
    return rows
