"""Bagged LambdaMART: gradient-boosted regression trees driven by pairwise
rank gradients weighted by |delta-AP| (binary labels), bagged over bootstrap
samples of query groups with per-tree feature subsampling.

Scores are the mean over bags of the sum of tree outputs (learning rate is
folded into the stored leaf values). Training is deterministic for a fixed
seed; models serialize to versioned JSON and reload to bit-identical scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import FEATURE_DIM, QueryGroup, RankingDataset

MODEL_FORMAT = "contrail-ranker"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    num_bags: int = 10
    trees_per_bag: int = 20
    num_leaves: int = 8
    min_leaf_support: int = 1
    learning_rate: float = 0.1
    feature_subsample: float = 0.7

    @classmethod
    def coerce(cls, value: "Hyperparams | dict | None") -> "Hyperparams":
        if value is None:
            return cls()
        if isinstance(value, Hyperparams):
            return value
        return cls(**value)

    def total_trees(self) -> int:
        return self.num_bags * self.trees_per_bag


@dataclass
class RegressionTree:
    """Array-encoded binary tree; leaves have feature == -1."""

    feature: list[int] = field(default_factory=lambda: [-1])
    threshold: list[float] = field(default_factory=lambda: [0.0])
    left: list[int] = field(default_factory=lambda: [-1])
    right: list[int] = field(default_factory=lambda: [-1])
    value: list[float] = field(default_factory=lambda: [0.0])

    def n_leaves(self) -> int:
        return sum(1 for f in self.feature if f == -1)

    def add_leaf(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict_row(self, x: Sequence[float]) -> float:
        node = 0
        while self.feature[node] != -1:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.value[node]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_row(row) for row in X], dtype=np.float64)

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X), dtype=np.int64)
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] != -1:
                node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = node
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(
            feature=[int(v) for v in d["feature"]],
            threshold=[float(v) for v in d["threshold"]],
            left=[int(v) for v in d["left"]],
            right=[int(v) for v in d["right"]],
            value=[float(v) for v in d["value"]],
        )


def _delta_ap(rel: np.ndarray, cum: np.ndarray, lo: int, hi: int, n_pos: int) -> float:
    """|AP change| when the differently-labeled ranked rows lo < hi swap."""
    ranks = np.arange(lo + 1, hi + 2, dtype=np.float64)
    seg_rel = rel[lo: hi + 1].astype(np.float64)
    seg_cum = cum[lo: hi + 1].astype(np.float64)
    before = float((seg_rel * seg_cum / ranks).sum())

    swapped = seg_rel.copy()
    swapped[0], swapped[-1] = swapped[-1], swapped[0]
    # Prefix counts shift by +-1 strictly inside the segment; the count at
    # hi itself is unchanged because the segment total is unchanged.
    shift = 1.0 if rel[hi] == 1 else -1.0
    new_cum = seg_cum.copy()
    new_cum[:-1] += shift
    after = float((swapped * new_cum / ranks).sum())
    return abs(after - before) / n_pos


def _group_gradients(
    scores: np.ndarray,
    labels: np.ndarray,
    tie_keys: Sequence[tuple],
    lambdas: np.ndarray,
    weights: np.ndarray,
) -> None:
    """Accumulate pairwise rank gradients for one group (in place)."""
    n = len(labels)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == n:
        return
    order = sorted(range(n), key=lambda i: (-scores[i], tie_keys[i]))
    rel = labels[np.array(order)]
    cum = np.cumsum(rel)

    for a in range(n):
        if rel[a] != 1:
            continue
        for b in range(n):
            if rel[b] != 0:
                continue
            lo, hi = (a, b) if a < b else (b, a)
            delta = _delta_ap(rel, cum, lo, hi, n_pos)
            if delta == 0.0:
                continue
            i, j = order[a], order[b]
            s_diff = float(np.clip(scores[i] - scores[j], -35.0, 35.0))
            rho = 1.0 / (1.0 + math.exp(s_diff))
            lambdas[i] += rho * delta
            lambdas[j] -= rho * delta
            w = rho * (1.0 - rho) * delta
            weights[i] += w
            weights[j] += w


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    feats: np.ndarray,
    min_support: int,
) -> Optional[tuple[float, int, float, np.ndarray, np.ndarray]]:
    """(gain, feature, threshold, left_idx, right_idx) or None.

    Gain is the SSE reduction of the split; ties keep the first candidate
    in (feature, position) order so structure is deterministic.
    """
    n = len(idx)
    if n < 2 * min_support:
        return None
    y_node = y[idx]
    total = float(y_node.sum())
    base = total * total / n
    best: Optional[tuple[float, int, float, np.ndarray, np.ndarray]] = None
    for f in feats:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        prefix = np.cumsum(y_node[order])
        sizes = np.arange(1, n, dtype=np.float64)
        valid = (sv[1:] > sv[:-1]) & (sizes >= min_support) & ((n - sizes) >= min_support)
        if not valid.any():
            continue
        sl = prefix[:-1]
        gains = np.where(valid, sl * sl / sizes + (total - sl) ** 2 / (n - sizes) - base, -np.inf)
        pos = int(np.argmax(gains))
        gain = float(gains[pos])
        if best is None or gain > best[0]:
            s = pos + 1
            threshold = float((sv[s - 1] + sv[s]) / 2.0)
            best = (gain, int(f), threshold, idx[order[:s]], idx[order[s:]])
    return best


def _build_tree(
    X: np.ndarray,
    lambdas: np.ndarray,
    weights: np.ndarray,
    feats: np.ndarray,
    num_leaves: int,
    min_support: int,
    learning_rate: float,
) -> RegressionTree:
    """Best-first (leaf-wise) growth on lambda targets, Newton leaf values."""
    tree = RegressionTree()
    all_idx = np.arange(len(X))
    # Open leaves: (node_id, row idx, cached best split)
    open_leaves = [(0, all_idx, _best_split(X, lambdas, all_idx, feats, min_support))]
    closed: list[tuple[int, np.ndarray]] = []

    while len(open_leaves) + len(closed) < num_leaves:
        pick = -1
        for li, (_, _, split) in enumerate(open_leaves):
            if split is None or split[0] <= 1e-12:
                continue
            if pick == -1 or split[0] > open_leaves[pick][2][0]:
                pick = li
        if pick == -1:
            break
        node_id, _, split = open_leaves.pop(pick)
        _, f, threshold, left_idx, right_idx = split
        tree.feature[node_id] = f
        tree.threshold[node_id] = threshold
        lid = tree.add_leaf()
        rid = tree.add_leaf()
        tree.left[node_id] = lid
        tree.right[node_id] = rid
        open_leaves.append((lid, left_idx, _best_split(X, lambdas, left_idx, feats, min_support)))
        open_leaves.append((rid, right_idx, _best_split(X, lambdas, right_idx, feats, min_support)))

    for node_id, idx, _ in open_leaves:
        closed.append((node_id, idx))
    for node_id, idx in closed:
        w_sum = float(weights[idx].sum())
        l_sum = float(lambdas[idx].sum())
        tree.value[node_id] = learning_rate * (l_sum / w_sum) if w_sum > 1e-12 else 0.0
    return tree


def _boost_bag(
    groups: list[QueryGroup],
    hp: Hyperparams,
    rng: np.random.Generator,
) -> list[RegressionTree]:
    X = np.vstack([g.feature_matrix() for g in groups])
    slices = []
    start = 0
    for g in groups:
        slices.append((start, start + len(g.rows)))
        start += len(g.rows)
    labels = [g.labels() for g in groups]
    tie_keys = [[row.terms for row in g.rows] for g in groups]

    n_sub = max(1, int(round(hp.feature_subsample * FEATURE_DIM)))
    scores = np.zeros(len(X))
    trees: list[RegressionTree] = []
    for _ in range(hp.trees_per_bag):
        feats = np.sort(rng.choice(FEATURE_DIM, size=n_sub, replace=False))
        lambdas = np.zeros(len(X))
        weights = np.zeros(len(X))
        for gi, (lo, hi) in enumerate(slices):
            _group_gradients(scores[lo:hi], labels[gi], tie_keys[gi], lambdas[lo:hi], weights[lo:hi])
        tree = _build_tree(X, lambdas, weights, feats, hp.num_leaves, hp.min_leaf_support, hp.learning_rate)
        scores += tree.predict(X)
        trees.append(tree)
    return trees


@dataclass
class RankerModel:
    bags: list[list[RegressionTree]]
    hyperparams: Hyperparams
    metadata: dict = field(default_factory=dict)

    def score(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != FEATURE_DIM:
            raise ValueError(f"expected {FEATURE_DIM} features, got {X.shape[1]}")
        total = np.zeros(len(X))
        for trees in self.bags:
            for tree in trees:
                total += tree.predict(X)
        return total / len(self.bags)

    def score_one(self, x: Sequence[float]) -> float:
        return float(self.score(np.asarray(x, dtype=np.float64))[0])

    def save(self, path: str | Path) -> None:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "hyperparams": asdict(self.hyperparams),
            "metadata": self.metadata,
            "bags": [[tree.to_dict() for tree in trees] for trees in self.bags],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "RankerModel":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a {MODEL_FORMAT} file: {path}")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        return cls(
            bags=[[RegressionTree.from_dict(t) for t in trees] for trees in doc["bags"]],
            hyperparams=Hyperparams(**doc["hyperparams"]),
            metadata=doc.get("metadata", {}),
        )


def train(
    dataset: RankingDataset,
    hyperparams: Hyperparams | dict | None = None,
    seed: int = 0,
) -> RankerModel:
    """Fit the bagged ranker; deterministic for a fixed seed.

    Each bag boosts on a bootstrap sample (with replacement) of the query
    groups. Raises if fewer than 2 groups or if no group mixes labels
    ("no ranking signal").
    """
    hp = Hyperparams.coerce(hyperparams)
    if len(dataset.groups) < 2:
        raise ValueError("training requires at least 2 groups")
    if not any(g.has_signal() for g in dataset.groups):
        raise ValueError("no ranking signal: every group has uniform labels")

    rng = np.random.default_rng(seed)
    bags = []
    for _ in range(hp.num_bags):
        pick = rng.integers(0, len(dataset.groups), size=len(dataset.groups))
        bag_groups = [dataset.groups[i] for i in pick]
        bags.append(_boost_bag(bag_groups, hp, rng))
    return RankerModel(
        bags=bags,
        hyperparams=hp,
        metadata={"seed": seed, "n_groups": len(dataset.groups), "feature_dim": FEATURE_DIM},
    )
