"""BOW feature construction and persistence tests."""

import math

import numpy as np
import pytest

from priorart.exceptions import ParameterError, ValidationError
from priorart.features import (
    BowConfig,
    BowVectorizer,
    FeatureMatrix,
    FeatureVector,
    build_features,
    idf,
    term_frequency,
)
from priorart.preprocessing import TokenizedDoc, Vocabulary, build_vocabulary


def toks(doc_id, text):
    return TokenizedDoc(doc_id, text.split())


class TestTermFrequency:
    def test_hand_count(self):
        vocab = build_vocabulary([toks("d", "a b")])
        vec = term_frequency(toks("d", "a b a"), vocab)
        assert vec.entries[vocab.index["a"]] == pytest.approx(2 / 3)
        assert vec.entries[vocab.index["b"]] == pytest.approx(1 / 3)

    def test_empty_doc(self):
        vocab = build_vocabulary([toks("d", "a")])
        assert term_frequency(toks("d", ""), vocab).entries == {}

    def test_oov_only(self):
        vocab = build_vocabulary([toks("d", "a")])
        assert term_frequency(toks("d", "z z"), vocab).entries == {}

    def test_oov_excluded_from_denominator(self):
        vocab = build_vocabulary([toks("d", "a b")])
        vec = term_frequency(toks("q", "a z z z"), vocab)
        assert vec.entries[vocab.index["a"]] == pytest.approx(1.0)


class TestIdf:
    def test_full_df_is_zero(self):
        vocab = Vocabulary(terms=["w"], doc_freq=[4], total_docs=4)
        assert idf(vocab, 0) == 0.0

    def test_rare_term(self):
        vocab = Vocabulary(terms=["w"], doc_freq=[1], total_docs=4)
        assert idf(vocab, 0) == pytest.approx(math.log(4), abs=1e-12)
        assert idf(vocab, 0) == pytest.approx(1.3863, abs=5e-5)

    def test_single_doc_corpus(self):
        vocab = Vocabulary(terms=["w"], doc_freq=[1], total_docs=1)
        assert idf(vocab, 0) == 0.0

    def test_zero_df_rejected(self):
        vocab = Vocabulary(terms=["w"], doc_freq=[1], total_docs=1)
        vocab.doc_freq[0] = 0
        with pytest.raises(ValidationError):
            idf(vocab, 0)


class TestBuildFeatures:
    def test_binary_presence(self):
        vocab = build_vocabulary([toks("d", "a b")])
        matrix = build_features([toks("d", "a a b")], vocab,
                                BowConfig(counting="binary", use_idf=False, norm=None))
        assert matrix.rows[0].entries == {vocab.index["a"]: 1.0, vocab.index["b"]: 1.0}

    def test_length_norm_gives_unit_vectors(self):
        rng = np.random.default_rng(0)
        docs = [toks(f"d{i}", " ".join(rng.choice(list("abcdefgh"), size=12))) for i in range(20)]
        vocab = build_vocabulary(docs)
        matrix = build_features(docs, vocab, BowConfig(counting="tf", use_idf=True, norm="length"))
        for row in matrix.rows:
            if row.entries:
                assert abs(row.norm() - 1.0) < 1e-12

    def test_max_norm_gives_unit_max(self):
        docs = [toks("d1", "a a b"), toks("d2", "b c")]
        vocab = build_vocabulary(docs)
        matrix = build_features(docs, vocab, BowConfig(counting="tf", use_idf=False, norm="max"))
        for row in matrix.rows:
            assert abs(max(row.entries.values()) - 1.0) < 1e-12

    def test_tfidf_hand_example(self):
        # corpus ["a b", "b"]: doc1 tf = {a: .5, b: .5}; idf(a)=ln2, idf(b)=0
        docs = [toks("d1", "a b"), toks("d2", "b")]
        vocab = build_vocabulary(docs)
        unnorm = build_features(docs, vocab, BowConfig(counting="tf", use_idf=True, norm=None))
        assert unnorm.rows[0].entries == pytest.approx({vocab.index["a"]: 0.5 * math.log(2)})
        assert abs(0.5 * math.log(2) - 0.3466) < 5e-5
        normed = build_features(docs, vocab, BowConfig(counting="tf", use_idf=True, norm="length"))
        assert normed.rows[0].entries == pytest.approx({vocab.index["a"]: 1.0})

    def test_ubiquitous_term_absent_from_sparse_storage(self):
        docs = [toks("d1", "common a"), toks("d2", "common b")]
        vocab = build_vocabulary(docs)
        matrix = build_features(docs, vocab, BowConfig(counting="tf", use_idf=True, norm=None))
        for row in matrix.rows:
            assert vocab.index["common"] not in row.entries

    def test_zero_vector_passes_normalization(self):
        vocab = build_vocabulary([toks("d", "a")])
        matrix = build_features([toks("q", "zzz")], vocab, BowConfig())
        assert matrix.rows[0].entries == {}

    def test_permutation_equivariance(self):
        docs = [toks("d1", "a b"), toks("d2", "b c"), toks("d3", "c a a")]
        vocab = build_vocabulary(docs)
        cfg = BowConfig()
        forward = build_features(docs, vocab, cfg)
        backward = build_features(docs[::-1], vocab, cfg)
        assert [r.entries for r in backward.rows] == [r.entries for r in forward.rows[::-1]]

    def test_invalid_config(self):
        with pytest.raises(ParameterError):
            BowConfig(counting="counts")
        with pytest.raises(ParameterError):
            BowConfig(norm="l2")


class TestFeatureVector:
    def test_dense_roundtrip_drops_zeros(self):
        vec = FeatureVector.from_dense("d", [0.0, 1.5, 0.0, -2.0])
        assert vec.entries == {1: 1.5, 3: -2.0}
        assert vec.to_dense().tolist() == [0.0, 1.5, 0.0, -2.0]

    def test_matrix_dim_check(self):
        with pytest.raises(ValidationError):
            FeatureMatrix(rows=[FeatureVector("a", {}, 3), FeatureVector("b", {}, 4)], dim=3)


class TestPersistence:
    def test_matrix_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        rows = []
        for i in range(10):
            dense = rng.random(30) * (rng.random(30) < 0.3)
            rows.append(FeatureVector.from_dense(f"doc{i}", dense))
        matrix = FeatureMatrix(rows=rows, dim=30)
        path = tmp_path / "features.tsv"
        matrix.save(path)
        loaded = FeatureMatrix.load(path)
        assert loaded.row_ids == matrix.row_ids
        assert loaded.dim == matrix.dim
        for a, b in zip(loaded.rows, matrix.rows):
            assert set(a.entries) == set(b.entries)
            for idx in a.entries:
                assert a.entries[idx] == pytest.approx(b.entries[idx], rel=1e-8)

    def test_header_precedes_rows(self, tmp_path):
        matrix = FeatureMatrix(rows=[FeatureVector("d", {0: 1.0}, 2)], dim=2)
        path = tmp_path / "features.tsv"
        matrix.save(path)
        assert path.read_text().splitlines()[0] == "#dim=2 rows=1"


class TestBowVectorizer:
    def test_fit_transform(self):
        docs = [toks("d1", "a b a"), toks("d2", "b c")]
        est = BowVectorizer(counting="tf", use_idf=True, norm="length")
        matrix = est.fit_transform(docs)
        assert len(matrix) == 2
        assert matrix.dim == len(est.vocabulary_)

    def test_get_params_roundtrip(self):
        est = BowVectorizer(counting="binary", use_idf=False, norm="max", min_count=2)
        params = est.get_params()
        clone = BowVectorizer(**params)
        assert clone.get_params() == params

    def test_unfitted_transform_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            BowVectorizer().transform([toks("d", "a")])

    def test_sparse_dense_agreement(self):
        rng = np.random.default_rng(7)
        docs = [toks(f"d{i}", " ".join(rng.choice(list("abcdefghij"), size=15)))
                for i in range(12)]
        matrix = BowVectorizer().fit_transform(docs)
        dense = matrix.to_dense()
        for r, row in enumerate(matrix.rows):
            sparse_dot = sum(v * row.entries.get(i, 0.0) for i, v in row.entries.items())
            assert abs(sparse_dot - float(dense[r] @ dense[r])) < 1e-12
