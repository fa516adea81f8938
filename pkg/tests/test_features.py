import itertools
import math

import numpy as np
import pytest

from contrail.claims import CandidateQuery, Claim
from contrail.corpus import spanning_subset
from contrail.features import (
    SENTINEL,
    EmptyAfterOOVError,
    FeatureVector,
    extract_features,
    similarity_stats,
    textrank_scores,
    tfidf_scores,
    wmd,
)

from conftest import make_doc, make_store


def transport_cost_bruteforce(cost, wa, wb, tol=1e-12):
    """Enumerate greedy saturation orders of the transportation problem.

    Every vertex of the transport polytope arises from some order of
    (cell pick, saturate row or column), so the minimum over all orders
    is the exact LP optimum. Only feasible for tiny problems.
    """
    best = [math.inf]

    def rec(supply, demand, acc):
        if acc >= best[0]:
            return
        live_i = [i for i, s in enumerate(supply) if s > tol]
        live_j = [j for j, d in enumerate(demand) if d > tol]
        if not live_i or not live_j:
            best[0] = min(best[0], acc)
            return
        for i in live_i:
            for j in live_j:
                amt = min(supply[i], demand[j])
                supply[i] -= amt
                demand[j] -= amt
                rec(supply, demand, acc + amt * cost[i][j])
                supply[i] += amt
                demand[j] += amt

    rec(list(wa), list(wb), 0.0)
    return best[0]


def wmd_oracle(doc_a, doc_b, vectors):
    toks_a = sorted({t for t in doc_a if t in vectors})
    toks_b = sorted({t for t in doc_b if t in vectors})
    wa = np.array([doc_a.count(t) for t in toks_a], dtype=float)
    wb = np.array([doc_b.count(t) for t in toks_b], dtype=float)
    wa /= wa.sum()
    wb /= wb.sum()
    cost = [[float(np.linalg.norm(vectors[a] - vectors[b])) for b in toks_b] for a in toks_a]
    return transport_cost_bruteforce(cost, wa, wb)


class TestWmd:
    def test_identical_docs_zero(self, toy_vectors):
        assert wmd(["w1", "w2", "w2"], ["w2", "w1", "w2"], toy_vectors) == 0.0

    def test_single_mass_is_euclidean(self, toy_vectors):
        assert wmd(["a"], ["b"], toy_vectors) == pytest.approx(5.0, abs=1e-12)

    def test_oov_dropped_then_error(self, toy_vectors):
        assert wmd(["a", "zzz"], ["b"], toy_vectors) == pytest.approx(5.0, abs=1e-12)
        with pytest.raises(EmptyAfterOOVError):
            wmd(["zzz"], ["b"], toy_vectors)

    def test_exact_matches_enumeration_small(self, toy_vectors):
        rng = np.random.default_rng(3)
        vocab = [f"w{i}" for i in range(5)]
        for _ in range(25):
            doc_a = [vocab[i] for i in rng.integers(0, 5, size=rng.integers(1, 4))]
            doc_b = [vocab[i] for i in rng.integers(0, 5, size=rng.integers(1, 4))]
            got = wmd(doc_a, doc_b, toy_vectors, method="exact")
            want = wmd_oracle(doc_a, doc_b, toy_vectors)
            assert got == pytest.approx(want, abs=1e-9)

    def test_relaxed_lower_bounds_exact(self, toy_vectors):
        rng = np.random.default_rng(7)
        vocab = [f"w{i}" for i in range(12)]
        for _ in range(200):
            doc_a = [vocab[i] for i in rng.integers(0, 12, size=rng.integers(1, 7))]
            doc_b = [vocab[i] for i in rng.integers(0, 12, size=rng.integers(1, 7))]
            relaxed = wmd(doc_a, doc_b, toy_vectors, method="relaxed")
            exact = wmd(doc_a, doc_b, toy_vectors, method="exact")
            assert relaxed <= exact + 1e-9

    def test_symmetry(self, toy_vectors):
        rng = np.random.default_rng(5)
        vocab = [f"w{i}" for i in range(12)]
        for _ in range(50):
            doc_a = [vocab[i] for i in rng.integers(0, 12, size=4)]
            doc_b = [vocab[i] for i in rng.integers(0, 12, size=4)]
            assert wmd(doc_a, doc_b, toy_vectors) == pytest.approx(wmd(doc_b, doc_a, toy_vectors), abs=1e-9)


class TestSimilarityStats:
    def test_two_identical_docs_give_unit_similarity(self, toy_vectors):
        docs = [make_doc(0, "w1 w2"), make_doc(1, "w1 w2")]
        subset = spanning_subset(docs, seed=0)
        f2, f3, f4, f5 = similarity_stats(subset, ["w1"], toy_vectors)
        assert f2 == 1.0 and f4 == 1.0

    def test_empty_subset_sentinels(self, toy_vectors):
        subset = spanning_subset([], seed=0)
        assert similarity_stats(subset, ["w1"], toy_vectors) == (SENTINEL,) * 4

    def test_matches_bruteforce_recomputation(self, toy_vectors):
        texts = ["w1 w2 w3", "w2 w4", "w5 w1 w1", "w6 w7 w2"]
        docs = [make_doc(i, t) for i, t in enumerate(texts)]
        subset = spanning_subset(docs, seed=0)
        claim_tokens = ["w1", "w4"]
        f2, f3, f4, f5 = similarity_stats(subset, claim_tokens, toy_vectors)

        token_lists = [t.split() for t in texts]
        pair = [
            1.0 / (1.0 + wmd(token_lists[i], token_lists[j], toy_vectors))
            for i, j in itertools.combinations(range(4), 2)
        ]
        claim = [1.0 / (1.0 + wmd(toks, claim_tokens, toy_vectors)) for toks in token_lists]
        assert f2 == pytest.approx(np.median(pair), abs=1e-12)
        assert f4 == pytest.approx(np.mean(pair), abs=1e-12)
        assert f3 == pytest.approx(np.median(claim), abs=1e-12)
        assert f5 == pytest.approx(np.mean(claim), abs=1e-12)

    def test_single_doc_pairwise_sentinel_claim_defined(self, toy_vectors):
        docs = [make_doc(0, "w1 w2")]
        subset = spanning_subset(docs, seed=0)
        f2, f3, f4, f5 = similarity_stats(subset, ["w1"], toy_vectors)
        assert f2 == SENTINEL and f4 == SENTINEL
        assert 0 < f3 <= 1 and 0 < f5 <= 1


class TestTextrank:
    def test_isolated_token_fixed_point(self):
        scores = textrank_scores(["solo"])
        assert scores["solo"] == pytest.approx(0.15, abs=1e-12)

    def test_two_tokens_symmetric(self):
        scores = textrank_scores(["left", "right"])
        assert scores["left"] == pytest.approx(scores["right"], abs=1e-12)

    def test_chain_matches_long_fixed_point(self):
        tokens = [f"t{i}" for i in range(6)]
        got = textrank_scores(tokens, window=2, tol=1e-12, max_iters=500)

        # Oracle: 200 dense power iterations of the same update rule.
        neighbors = {i: [] for i in range(6)}
        for i in range(5):
            neighbors[i].append(i + 1)
            neighbors[i + 1].append(i)
        scores = {i: 1.0 for i in range(6)}
        for _ in range(200):
            scores = {
                v: 0.15 + 0.85 * sum(scores[u] / len(neighbors[u]) for u in neighbors[v])
                for v in range(6)
            }
        for i, tok in enumerate(tokens):
            assert got[tok] == pytest.approx(scores[i], abs=1e-8)

    def test_scores_positive_and_converged(self):
        rng = np.random.default_rng(0)
        tokens = [f"w{i}" for i in rng.integers(0, 10, size=60)]
        scores = textrank_scores(tokens, tol=1e-10, max_iters=1000)
        assert all(s > 0 for s in scores.values())
        again = textrank_scores(tokens, tol=1e-10, max_iters=1001)
        for tok in scores:
            assert scores[tok] == pytest.approx(again[tok], abs=1e-8)


class TestTfidf:
    def test_term_in_every_document(self):
        store = make_store(["everywhere a", "everywhere b", "everywhere c"])
        claim_tokens = ["everywhere", "everywhere", "rare"]
        scores = tfidf_scores(["everywhere"], claim_tokens, store)
        # idf = ln(1) + 1 = 1 when df == N, so score == tf
        assert scores["everywhere"] == pytest.approx(2 / 3, abs=1e-12)

    def test_term_absent_from_claim(self):
        store = make_store(["x y"])
        assert tfidf_scores(["ghost"], ["x"], store)["ghost"] == 0.0

    def test_hand_computed_table(self):
        texts = [
            "apple banana", "apple cherry", "apple date", "apple elder",
            "banana cherry", "banana date", "fig grape", "fig honey",
            "iris joker", "kiwi lemon",
        ]
        store = make_store(texts)
        claim_tokens = ["apple", "banana", "kiwi", "apple"]
        scores = tfidf_scores(["apple", "banana", "kiwi"], claim_tokens, store)
        n = 10
        assert scores["apple"] == pytest.approx((2 / 4) * (math.log(11 / 5) + 1), abs=1e-12)
        assert scores["banana"] == pytest.approx((1 / 4) * (math.log(11 / 4) + 1), abs=1e-12)
        assert scores["kiwi"] == pytest.approx((1 / 4) * (math.log(11 / 2) + 1), abs=1e-12)


class TestExtractFeatures:
    def _fixture(self):
        texts = [f"soros caravan extra{i} w1 w2" for i in range(42)]
        texts += [f"unrelated chatter {i} w3" for i in range(20)]
        store = make_store(texts)
        claim = Claim(id="c", title="Did soros fund the caravan now")
        return store, claim

    def test_hit_count_exact(self, toy_vectors):
        store, claim = self._fixture()
        cand = CandidateQuery("c", ("soros", "caravan"))
        fvec = extract_features(cand, claim, store, toy_vectors, seed=1)
        assert fvec.f1_hit_count == 42.0

    def test_zero_hits_sentinel_shape(self, toy_vectors):
        store, claim = self._fixture()
        cand = CandidateQuery("c", ("soros", "fund"))  # "fund" absent from store
        fvec = extract_features(cand, claim, store, toy_vectors, seed=1)
        assert fvec.f1_hit_count == 0.0
        assert fvec.f2_median_pairwise_sim == SENTINEL
        assert fvec.f3_median_claim_sim == SENTINEL
        assert fvec.f4_mean_pairwise_sim == SENTINEL
        assert fvec.f5_mean_claim_sim == SENTINEL
        assert fvec.f6_median_textrank > 0
        assert fvec.f7_median_tfidf >= 0

    def test_term_order_irrelevant(self, toy_vectors):
        store, claim = self._fixture()
        a = extract_features(CandidateQuery("c", ("soros", "caravan")), claim, store, toy_vectors, seed=1)
        b = extract_features(CandidateQuery("c", ("caravan", "soros")), claim, store, toy_vectors, seed=1)
        assert a.as_array().tolist() == b.as_array().tolist()

    def test_pure_given_seed(self, toy_vectors):
        store, claim = self._fixture()
        cand = CandidateQuery("c", ("soros", "caravan"))
        a = extract_features(cand, claim, store, toy_vectors, seed=9)
        b = extract_features(cand, claim, store, toy_vectors, seed=9)
        assert a == b

    def test_vector_shape_round_trip(self):
        fvec = FeatureVector(1, 2, 3, 4, 5, 6, 7)
        assert FeatureVector.from_array(fvec.as_array()) == fvec
        with pytest.raises(ValueError):
            FeatureVector.from_array([1.0, 2.0])
