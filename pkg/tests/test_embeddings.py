import numpy as np
import pytest

from contrail.embeddings import (
    EmbeddingModel,
    SkipgramParams,
    cosine,
    keyword_similarity,
    procrustes_align,
    similarity_matrix,
    train_skipgram,
)


def cluster_corpus(seed=1, n_docs=120, doc_len=12):
    """Two interleaved topics with disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    voc_a = [f"a{i}" for i in range(6)]
    voc_b = [f"b{i}" for i in range(6)]
    docs = []
    for i in range(n_docs):
        voc = voc_a if i % 2 == 0 else voc_b
        docs.append([voc[j] for j in rng.integers(0, 6, size=doc_len)])
    return docs, voc_a, voc_b


def model_from_matrix(tokens, matrix, claim_id="c", community="x"):
    return EmbeddingModel(
        claim_id=claim_id,
        community=community,
        tokens=list(tokens),
        matrix=np.asarray(matrix, dtype=np.float64),
        params=SkipgramParams(dim=np.asarray(matrix).shape[1]),
        seed=0,
    )


def random_orthogonal(d, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return Q


class TestSkipgram:
    def test_topic_clusters_separate(self):
        docs, voc_a, voc_b = cluster_corpus()
        model = train_skipgram(docs, SkipgramParams(dim=16, epochs=10, min_count=2), seed=5)
        intra, inter = [], []
        for i in range(6):
            for j in range(i + 1, 6):
                intra.append(cosine(model.vector(voc_a[i]), model.vector(voc_a[j])))
                intra.append(cosine(model.vector(voc_b[i]), model.vector(voc_b[j])))
            for j in range(6):
                inter.append(cosine(model.vector(voc_a[i]), model.vector(voc_b[j])))
        assert np.mean(intra) > np.mean(inter)

    def test_self_cosine_is_one(self):
        docs, voc_a, _ = cluster_corpus()
        model = train_skipgram(docs, SkipgramParams(dim=8, epochs=2), seed=0)
        for tok in model.tokens:
            assert cosine(model.vector(tok), model.vector(tok)) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_given_seed(self):
        docs, _, _ = cluster_corpus()
        params = SkipgramParams(dim=8, epochs=3)
        a = train_skipgram(docs, params, seed=42)
        b = train_skipgram(docs, params, seed=42)
        assert np.array_equal(a.matrix, b.matrix)
        assert a.tokens == b.tokens

    def test_insufficient_corpus(self):
        with pytest.raises(ValueError, match="insufficient corpus"):
            train_skipgram([["lonely"]], SkipgramParams(min_count=2), seed=0)

    def test_save_load_round_trip(self, tmp_path):
        docs, _, _ = cluster_corpus()
        model = train_skipgram(docs, SkipgramParams(dim=8, epochs=2), seed=3, claim_id="c9", community="news")
        path = tmp_path / "model.vec"
        model.save(path)
        loaded = EmbeddingModel.load(path)
        assert loaded.claim_id == "c9" and loaded.community == "news"
        assert loaded.tokens == model.tokens
        assert np.array_equal(loaded.matrix, model.matrix)


class TestProcrustes:
    def _base(self, d=8):
        docs, _, _ = cluster_corpus()
        return train_skipgram(docs, SkipgramParams(dim=d, epochs=4, min_count=2), seed=5)

    def test_identity_when_target_equals_source(self):
        base = self._base()
        Q = procrustes_align(base, base)
        S = base.matrix
        assert np.linalg.norm(S @ Q - S) < 1e-8

    def test_orthogonality(self):
        base = self._base()
        rotated = model_from_matrix(base.tokens, base.matrix @ random_orthogonal(base.dim, 3))
        Q = procrustes_align(base, rotated)
        assert np.abs(Q.T @ Q - np.eye(base.dim)).max() < 1e-8

    def test_recovers_planted_rotation(self):
        base = self._base()
        R = random_orthogonal(base.dim, 17)
        rotated = model_from_matrix(base.tokens, base.matrix @ R)
        Q = procrustes_align(base, rotated)
        assert np.linalg.norm(Q - R) < 1e-6

    def test_noise_residual_not_worse_than_unaligned(self):
        base = self._base()
        rng = np.random.default_rng(0)
        R = random_orthogonal(base.dim, 23)
        noisy = model_from_matrix(base.tokens, base.matrix @ R + 0.01 * rng.standard_normal(base.matrix.shape))
        Q = procrustes_align(base, noisy)
        aligned = np.linalg.norm(base.matrix @ Q - noisy.matrix)
        unaligned = np.linalg.norm(base.matrix - noisy.matrix)
        assert aligned <= unaligned

    def test_insufficient_anchor_vocabulary(self):
        small = model_from_matrix(["x", "y"], np.eye(2, 8))
        other = model_from_matrix(["x", "y"], np.eye(2, 8))
        with pytest.raises(ValueError, match="insufficient anchor vocabulary"):
            procrustes_align(small, other)

    def test_degenerate_rank_warns_but_proceeds(self):
        tokens = [f"t{i}" for i in range(6)]
        M = np.zeros((6, 3))
        M[:, 0] = np.arange(6)  # rank-1 anchors
        a = model_from_matrix(tokens, M)
        b = model_from_matrix(tokens, M)
        with pytest.warns(UserWarning, match="rank degenerate"):
            Q = procrustes_align(a, b)
        assert np.abs(Q.T @ Q - np.eye(3)).max() < 1e-8


class TestKeywordSimilarity:
    def _base(self, d=8):
        docs, _, _ = cluster_corpus()
        return train_skipgram(docs, SkipgramParams(dim=d, epochs=4, min_count=2), seed=5)

    def test_self_similarity_one(self):
        base = self._base()
        assert keyword_similarity(base, base, base.tokens[:3]) == pytest.approx(1.0, abs=1e-9)

    def test_rotated_copy_similarity_one(self):
        base = self._base()
        rotated = model_from_matrix(base.tokens, base.matrix @ random_orthogonal(base.dim, 31))
        assert keyword_similarity(base, rotated, base.tokens[:4]) == pytest.approx(1.0, abs=1e-6)

    def test_missing_keywords_sentinel(self):
        base = self._base()
        assert keyword_similarity(base, base, ["not-in-vocab"]) is None

    def test_invariant_under_global_rotation(self):
        base = self._base()
        other = model_from_matrix(base.tokens, base.matrix + 0.05)
        plain = keyword_similarity(base, other, base.tokens[:5])
        rotated = model_from_matrix(base.tokens, other.matrix @ random_orthogonal(base.dim, 41))
        assert keyword_similarity(base, rotated, base.tokens[:5]) == pytest.approx(plain, abs=1e-9)


class TestSimilarityMatrix:
    def _models(self):
        docs, _, _ = cluster_corpus()
        params = SkipgramParams(dim=8, epochs=3, min_count=2)
        out = {}
        for cid in ("c1", "c2"):
            for ci, comm in enumerate(("alpha", "beta", "gamma")):
                seed = hash((cid, comm)) % 1000
                out[(cid, comm)] = train_skipgram(docs, params, seed=seed, claim_id=cid, community=comm)
        return out

    def test_identical_corpora_near_one_diagonal_exact(self):
        models = self._models()
        keywords = {"c1": ["a0", "a1"], "c2": ["b0", "b1"]}
        matrix = similarity_matrix(models, keywords, ["alpha", "beta", "gamma"])
        assert np.array_equal(np.diag(matrix.values), np.ones(3))
        assert np.abs(matrix.values - matrix.values.T).max() < 1e-12

    def test_matches_direct_recomputation(self):
        models = self._models()
        keywords = {"c1": ["a0", "a1"], "c2": ["b0", "b1"]}
        matrix = similarity_matrix(models, keywords, ["alpha", "beta", "gamma"])
        for i, a in enumerate(("alpha", "beta", "gamma")):
            for j, b in enumerate(("alpha", "beta", "gamma")):
                if i >= j:
                    continue
                sims = [
                    keyword_similarity(models[(cid, a)], models[(cid, b)], keywords[cid])
                    for cid in ("c1", "c2")
                ]
                assert matrix.values[i, j] == pytest.approx(np.mean(sims), abs=1e-12)

    def test_missing_pair_marked_nan(self):
        models = self._models()
        del models[("c1", "gamma")]
        del models[("c2", "gamma")]
        matrix = similarity_matrix(models, {"c1": ["a0"], "c2": ["a0"]}, ["alpha", "beta", "gamma"])
        assert np.isnan(matrix.values[0, 2]) and np.isnan(matrix.values[2, 1])
        assert matrix.values[2, 2] == 1.0

    def test_csv_emission(self, tmp_path):
        models = self._models()
        matrix = similarity_matrix(models, {"c1": ["a0"], "c2": ["b0"]}, ["alpha", "beta", "gamma"])
        path = tmp_path / "heatmap.csv"
        matrix.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "community,alpha,beta,gamma"
        assert len(lines) == 4
