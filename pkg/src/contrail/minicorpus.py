"""Deterministic synthetic mini-corpus: 5 claims, ~2000 documents across
three subreddit-style communities plus twitter, with planted "true" keyword
pairs, partial-match distractors, pre-annotated labels, and a ready-to-run
pipeline config. Used by the demo command and the end-to-end tests.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

REDDIT_COMMUNITIES = ["conspiracy", "news", "politics"]
COMMUNITIES = REDDIT_COMMUNITIES + ["twitter"]

# (id, title, topics, true pair, distractor token from the claim)
CLAIM_SPECS = [
    ("c1", "Did George Soros fund the migrant caravan", ["clinton"], ("soros", "caravan"), "george"),
    ("c2", "Did Hillary Clinton run a child ring from a pizzeria", ["clinton"], ("clinton", "pizzeria"), "child"),
    ("c3", "Did Donald Trump ban every vaccine for the military", ["trump"], ("trump", "vaccine"), "military"),
    ("c4", "Is 5g radiation causing covid symptoms in cities", ["covid"], ("5g", "covid"), "cities"),
    ("c5", "Did china engineer the covid virus in a wuhan lab", ["covid"], ("wuhan", "virus"), "china"),
]

FILLER = (
    "people say today report still think going maybe read share online "
    "story post thread user week never around true question source look "
    "media claim proof video watch happen real world group money power "
    "years wrong right know everyone believe actually evidence news old"
).split()

BASE_TS = 1_577_836_800  # 2020-01-01 UTC
DAY = 86400


def _filler(rng: np.random.Generator, n: int) -> list[str]:
    return [FILLER[i] for i in rng.integers(0, len(FILLER), size=n)]


def generate(out_dir: str | Path, seed: int = 7) -> dict:
    """Write claims/dumps/labels/config under ``out_dir``; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    claims_path = out / "claims.jsonl"
    with open(claims_path, "w", encoding="utf-8") as fh:
        for cid, title, topics, _pair, _d in CLAIM_SPECS:
            fh.write(json.dumps({"id": cid, "title": title, "published": "2020-06-01", "topics": topics}) + "\n")

    reddit_lines: list[dict] = []
    twitter_lines: list[dict] = []
    doc_no = 0

    def add_doc(community: str, ts: int, text: str, kind: str, parent: str | None = None) -> str:
        nonlocal doc_no
        doc_no += 1
        doc_id = f"d{doc_no:05d}"
        if community == "twitter":
            twitter_lines.append({"id_str": doc_id, "timestamp_ms": ts * 1000, "text": text})
        elif kind == "post":
            reddit_lines.append({"id": doc_id, "subreddit": community, "created_utc": ts, "title": text})
        else:
            reddit_lines.append(
                {"id": doc_id, "subreddit": community, "created_utc": ts, "body": text, "parent_id": f"t3_{parent}"}
            )
        return doc_id

    for ci, (cid, title, _topics, (tok_a, tok_b), distractor) in enumerate(CLAIM_SPECS):
        start = BASE_TS + ci * 20 * DAY
        span_days = int(rng.integers(200, 420))
        for community in COMMUNITIES:
            n_docs = int(rng.integers(58, 85))
            # Communities fire in a fixed order per claim so the event
            # series have some lead/lag structure to fit.
            lag = COMMUNITIES.index(community) * 3
            post_ids: list[str] = []
            for _ in range(n_docs):
                day = lag + float(rng.gamma(2.0, span_days / 6.0))
                ts = start + int(day * DAY)
                words = _filler(rng, int(rng.integers(5, 11)))
                insert = rng.integers(0, len(words) + 1)
                words[insert:insert] = [tok_a, tok_b]
                if rng.random() < 0.3:
                    words.append(distractor)
                text = " ".join(words)
                if community == "twitter":
                    add_doc(community, ts, text, "tweet")
                elif rng.random() < 0.6:
                    post_ids.append(add_doc(community, ts, text, "post"))
                else:
                    parent = post_ids[int(rng.integers(0, len(post_ids)))] if post_ids else None
                    if parent is None:
                        post_ids.append(add_doc(community, ts, text, "post"))
                    else:
                        add_doc(community, ts, text, "comment", parent)
        # Partial-match distractors: one true token only.
        for tok in (tok_a, tok_b, distractor):
            for _ in range(8):
                community = COMMUNITIES[int(rng.integers(0, len(COMMUNITIES)))]
                ts = start + int(rng.integers(0, span_days * DAY))
                text = " ".join(_filler(rng, 7) + [tok])
                add_doc(community, ts, text, "tweet" if community == "twitter" else "post")

    # Background chatter without claim tokens.
    for _ in range(400):
        community = COMMUNITIES[int(rng.integers(0, len(COMMUNITIES)))]
        ts = BASE_TS + int(rng.integers(0, 500 * DAY))
        text = " ".join(_filler(rng, int(rng.integers(6, 12))))
        add_doc(community, ts, text, "tweet" if community == "twitter" else "post")

    reddit_path = out / "reddit.jsonl"
    with open(reddit_path, "w", encoding="utf-8") as fh:
        for rec in reddit_lines:
            fh.write(json.dumps(rec) + "\n")
    twitter_path = out / "twitter.jsonl"
    with open(twitter_path, "w", encoding="utf-8") as fh:
        for rec in twitter_lines:
            fh.write(json.dumps(rec) + "\n")

    labels_path = out / "labels.jsonl"
    with open(labels_path, "w", encoding="utf-8") as fh:
        for cid, title, _topics, (tok_a, tok_b), distractor in CLAIM_SPECS:
            recs = [
                {"claim_id": cid, "terms": [tok_a, tok_b], "relevant": 1, "annotator": "synthetic", "ts": BASE_TS},
                {"claim_id": cid, "terms": [tok_a, distractor], "relevant": 0, "annotator": "synthetic", "ts": BASE_TS},
                {"claim_id": cid, "terms": [tok_b, distractor], "relevant": 0, "annotator": "synthetic", "ts": BASE_TS},
            ]
            for rec in recs:
                fh.write(json.dumps(rec) + "\n")

    config = {
        "claims_path": "claims.jsonl",
        "labels_path": "labels.jsonl",
        "output_dir": "out",
        "dumps": [
            {"path": "reddit.jsonl", "format": "reddit_jsonl"},
            {"path": "twitter.jsonl", "format": "twitter_jsonl"},
        ],
        "communities": COMMUNITIES,
        "baseline_communities": ["news", "politics"],
        "candidate_cap": 40,
        "wmd_method": "relaxed",
        "ltr": {"num_bags": 8, "trees_per_bag": 10, "num_leaves": 8, "min_leaf_support": 1},
        "cv_folds": 5,
        "embedding": {"dim": 16, "epochs": 6, "min_count": 2, "min_docs": 40, "fallback": {"dim": 24, "epochs": 3, "min_count": 5}},
        "hawkes": {"iters": 500, "burn_in": 150, "beta_grid": [0.5, 1.0, 2.0, 4.0, 8.0]},
        "toxicity": {"mode": "stub"},
        "topics": ["clinton", "trump", "covid"],
        "seed": seed,
    }
    config_path = out / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=1, sort_keys=True)
        fh.write("\n")

    return {
        "claims": str(claims_path),
        "reddit": str(reddit_path),
        "twitter": str(twitter_path),
        "labels": str(labels_path),
        "config": str(config_path),
        "documents": doc_no,
    }
