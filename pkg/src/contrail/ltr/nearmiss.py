"""NearMiss-3 undersampling of negative rows within a query group.

Two stages: shortlist the m nearest negatives of every positive, then keep
the shortlisted negatives whose mean distance to their k nearest positives
is largest, retaining as many negatives as there are positives. Distances
are Euclidean on standardized features; pass precomputed (means, stds)
fitted on the training fold, otherwise they are fitted on the group itself.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .dataset import QueryGroup


def nearmiss3(
    group: QueryGroup,
    shortlist_m: int = 3,
    k: int = 3,
    means: Optional[np.ndarray] = None,
    stds: Optional[np.ndarray] = None,
) -> QueryGroup:
    """Balanced copy of ``group``; positives always survive.

    Groups without negatives (or without positives) come back unchanged.
    Output rows keep their original order, so the result is a row subset.
    """
    labels = group.labels()
    pos_idx = np.flatnonzero(labels == 1)
    neg_idx = np.flatnonzero(labels == 0)
    if len(pos_idx) == 0 or len(neg_idx) == 0:
        return QueryGroup(qid=group.qid, rows=list(group.rows))

    X = group.feature_matrix()
    if means is None or stds is None:
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        stds = np.where(stds == 0.0, 1.0, stds)
    Z = (X - means) / stds

    # Stage 1: union of each positive's shortlist_m nearest negatives.
    # Ties break toward the lower row index (stable argsort).
    dists = np.sqrt(((Z[pos_idx][:, None, :] - Z[neg_idx][None, :, :]) ** 2).sum(axis=2))
    shortlist: set[int] = set()
    m = min(shortlist_m, len(neg_idx))
    for p in range(len(pos_idx)):
        nearest = np.argsort(dists[p], kind="stable")[:m]
        shortlist.update(int(neg_idx[j]) for j in nearest)

    # Stage 2: from the shortlist, keep negatives with the LARGEST mean
    # distance to their k nearest positives.
    shortlist_sorted = sorted(shortlist)
    kk = min(k, len(pos_idx))
    mean_dists = []
    for neg in shortlist_sorted:
        d = np.sqrt(((Z[pos_idx] - Z[neg]) ** 2).sum(axis=1))
        nearest_pos = np.sort(d, kind="stable")[:kk]
        mean_dists.append(float(nearest_pos.mean()))

    n_keep = min(len(pos_idx), len(shortlist_sorted))
    ranked = sorted(
        range(len(shortlist_sorted)),
        key=lambda i: (-mean_dists[i], shortlist_sorted[i]),
    )
    kept_negs = {shortlist_sorted[i] for i in ranked[:n_keep]}

    keep = sorted(set(int(i) for i in pos_idx) | kept_negs)
    return QueryGroup(qid=group.qid, rows=[group.rows[i] for i in keep])
