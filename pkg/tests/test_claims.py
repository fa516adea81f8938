import json
import math

import pytest

from contrail.claims import (
    Claim,
    GroundTruthLabel,
    LabelStore,
    annotation_sample,
    base_keyword,
    candidate_queries,
    load_claims,
    preprocess,
    write_claims,
)

from conftest import make_store


class TestPreprocess:
    def test_snopes_style_title(self):
        title = "Did AT&T have a contract to audit Dominion voting systems"
        assert preprocess(title) == ["att", "contract", "audit", "dominion", "voting", "systems"]

    def test_empty_title(self):
        assert preprocess("") == []

    def test_stopword_only_title(self):
        assert preprocess("The The The") == []


class TestCandidateQueries:
    def test_combination_count_for_4_tokens(self):
        claim = Claim(id="c", title="alpha bravo charlie delta")
        cands = candidate_queries(claim, mode="combinations", cap=1000)
        assert len(cands) == math.comb(4, 2) + math.comb(4, 3) + math.comb(4, 4)  # 11

    def test_contiguous_count_for_5_tokens(self):
        claim = Claim(id="c", title="alpha bravo charlie delta echo")
        cands = candidate_queries(claim, mode="contiguous", cap=1000)
        assert len(cands) == 4 + 3 + 2

    def test_cap_ranked_by_tfidf_oracle(self):
        tokens = [f"tok{i}" for i in range(12)]
        claim = Claim(id="c", title=" ".join(tokens))
        cands = candidate_queries(claim, mode="combinations", cap=100)
        assert len(cands) == 100
        # Independent oracle: enumerate all 781 subsets, rank by summed tf
        # (idf = 1 without a store), same tie-break.
        import itertools

        tf = {t: 1 / 12 for t in tokens}
        scored = []
        for size in (2, 3, 4):
            for combo in itertools.combinations(tokens, size):
                scored.append((-sum(tf[t] for t in combo), size, combo))
        assert len(scored) == 781
        scored.sort()
        expected = [c for *_rank, c in scored[:100]]
        assert [c.terms for c in cands] == expected
        again = candidate_queries(claim, mode="combinations", cap=100)
        assert [c.terms for c in again] == [c.terms for c in cands]

    def test_too_few_tokens_warns_empty(self):
        claim = Claim(id="c", title="the soros")  # one usable token
        with pytest.warns(UserWarning, match="fewer than 2"):
            assert candidate_queries(claim) == []

    def test_terms_subset_of_claim_tokens(self):
        claim = Claim(id="c", title="Did George Soros fund the migrant caravan")
        tokens = set(preprocess(claim.title))
        for cand in candidate_queries(claim, cap=500):
            assert set(cand.terms) <= tokens
            assert 2 <= len(cand.terms) <= 4

    def test_store_idf_changes_ranking(self):
        claim = Claim(id="c", title="common word rare thing")
        store = make_store(["common word everywhere", "common word again", "common filler"])
        plain = candidate_queries(claim, cap=3)
        with_store = candidate_queries(claim, cap=3, store=store)
        assert [c.terms for c in plain] != [c.terms for c in with_store]

    def test_base_keyword_first_last(self):
        claim = Claim(id="c", title="Did George Soros fund the migrant caravan")
        kw = base_keyword(claim)
        assert kw.terms == ("george", "caravan")
        assert kw.source == "base_keyword"


class TestAnnotationSample:
    def test_sample_of_20_distinct(self):
        store = make_store([f"needle filler{i} extra" for i in range(200)])
        sample = annotation_sample(["needle"], store, n=20, seed=4)
        assert len(sample) == 20
        assert len({d.id for d in sample}) == 20

    def test_fewer_hits_than_n(self):
        store = make_store([f"needle {i}" for i in range(7)])
        assert len(annotation_sample(["needle"], store, n=20, seed=4)) == 7

    def test_deterministic(self):
        store = make_store([f"needle fill{i}" for i in range(100)])
        a = annotation_sample(["needle"], store, n=20, seed=123)
        b = annotation_sample(["needle"], store, n=20, seed=123)
        assert [d.id for d in a] == [d.id for d in b]

    def test_zero_hits(self):
        store = make_store(["nothing relevant"])
        assert annotation_sample(["absent"], store, n=20, seed=0) == []


class TestClaimFiles:
    def test_round_trip(self, tmp_path):
        claims = [
            Claim(id="c1", title="First claim title", topics=("covid",)),
            Claim(id="c2", title="Second claim", topics=("clinton", "trump")),
        ]
        path = tmp_path / "claims.jsonl"
        write_claims(claims, path)
        loaded = load_claims(path)
        assert [(c.id, c.title, c.topics) for c in loaded] == [(c.id, c.title, c.topics) for c in claims]

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "claims.jsonl"
        rec = {"id": "c1", "title": "t", "published": None, "topics": []}
        path.write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(ValueError, match="duplicate claim id"):
            load_claims(path)


class TestLabelStore:
    def test_write_then_read_lossless(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        store = LabelStore(path)
        store.add(GroundTruthLabel("c1", ("soros", "caravan"), True, annotator="me", ts=5))
        store.add(GroundTruthLabel("c1", ("george", "fund"), False, annotator="me", ts=6))
        reloaded = LabelStore(path)
        assert len(reloaded) == 2
        assert reloaded.relevant_term_sets("c1") == [frozenset({"soros", "caravan"})]

    def test_last_write_wins(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        store = LabelStore(path)
        store.add(GroundTruthLabel("c1", ("a", "b"), True, ts=1))
        store.add(GroundTruthLabel("c1", ("b", "a"), False, ts=2))  # same term set
        reloaded = LabelStore(path)
        assert len(reloaded) == 1
        assert reloaded.relevant_term_sets("c1") == []
