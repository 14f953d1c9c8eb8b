"""Text normalization, tokenization, and vocabulary tests."""

import pytest
from hypothesis import given, strategies as st

from priorart.corpus import PatentDocument
from priorart.exceptions import ParameterError
from priorart.preprocessing import (
    TokenizedDoc,
    Vocabulary,
    build_vocabulary,
    preprocess,
    tokenize,
)


def make_doc(**kwargs):
    base = dict(id="US1", title="", abstract="placeholder", claims="", description="",
                pub_year=2015, category="A61B", cited_ids=[])
    base.update(kwargs)
    return PatentDocument(**base)


class TestPreprocess:
    def test_punctuation_and_case(self):
        assert preprocess("Bone-Anchoring MEMBER!") == "bone anchoring member"

    def test_empty(self):
        assert preprocess("") == ""

    def test_non_ascii_policy(self):
        # non-ASCII letters are separators under the ASCII-alphanumeric policy
        assert preprocess("α-Helix 2.0") == "helix 2 0"

    def test_whitespace_collapse(self):
        assert preprocess("  a\t\nb   c  ") == "a b c"

    @given(st.text(max_size=200))
    def test_idempotent(self, text):
        once = preprocess(text)
        assert preprocess(once) == once

    @given(st.text(max_size=200))
    def test_output_alphabet(self, text):
        out = preprocess(text)
        assert all(c.islower() or c.isdigit() or c == " " for c in out)
        assert "  " not in out
        assert out == out.strip()


class TestTokenize:
    def test_abstract_section(self):
        doc = make_doc(abstract="A wire.")
        assert tokenize(doc, "abstract").tokens == ["a", "wire"]

    def test_fulltext_is_section_concatenation(self):
        doc = make_doc(title="Ti T.", abstract="Ab one", claims="CLAIM 2!", description="desc")
        full = tokenize(doc, "fulltext").tokens
        parts = sum((tokenize(doc, s).tokens for s in
                     ("abstract", "claims", "description")), tokenize_title(doc))
        assert full == parts

    def test_empty_section(self):
        doc = make_doc(claims="")
        assert tokenize(doc, "claims").tokens == []

    def test_title_abstract(self):
        doc = make_doc(title="One", abstract="two three")
        assert tokenize(doc, "title_abstract").tokens == ["one", "two", "three"]

    def test_unknown_section(self):
        with pytest.raises(ParameterError):
            tokenize(make_doc(), "figures")


def tokenize_title(doc):
    from priorart.preprocessing import preprocess

    return preprocess(doc.title).split()


class TestVocabulary:
    def test_counts_by_hand(self):
        docs = [TokenizedDoc("d1", ["a", "b"]), TokenizedDoc("d2", ["b", "c"])]
        vocab = build_vocabulary(docs, min_count=1)
        assert len(vocab) == 3
        assert vocab.doc_freq[vocab.index["b"]] == 2
        assert vocab.doc_freq[vocab.index["a"]] == 1

    def test_min_count_two(self):
        docs = [TokenizedDoc("d1", ["a", "b"]), TokenizedDoc("d2", ["b", "c"])]
        vocab = build_vocabulary(docs, min_count=2)
        assert vocab.terms == ["b"]

    def test_min_count_one_keeps_all_distinct_tokens(self):
        docs = [TokenizedDoc("d", list("aabbccdd"))]
        assert len(build_vocabulary(docs, min_count=1)) == 4

    def test_doc_freq_counts_documents_not_tokens(self):
        docs = [TokenizedDoc("d1", ["a", "a", "a"]), TokenizedDoc("d2", ["b"])]
        vocab = build_vocabulary(docs, min_count=1)
        assert vocab.doc_freq[vocab.index["a"]] == 1

    def test_empty_input(self):
        vocab = build_vocabulary([], min_count=1)
        assert len(vocab) == 0 and vocab.total_docs == 0

    def test_index_bijection(self):
        docs = [TokenizedDoc("d", ["w%d" % i for i in range(50)])]
        vocab = build_vocabulary(docs)
        for i, term in enumerate(vocab.terms):
            assert vocab.index[term] == i

    def test_doc_freq_bounds(self):
        docs = [TokenizedDoc(f"d{i}", ["shared", f"only{i}"]) for i in range(5)]
        vocab = build_vocabulary(docs)
        assert all(1 <= df <= vocab.total_docs for df in vocab.doc_freq)

    def test_first_occurrence_order(self):
        docs = [TokenizedDoc("d1", ["z", "a"]), TokenizedDoc("d2", ["m", "a"])]
        assert build_vocabulary(docs).terms == ["z", "a", "m"]

    def test_min_count_validation(self):
        with pytest.raises(ParameterError):
            build_vocabulary([], min_count=0)

    def test_roundtrip(self, tmp_path):
        docs = [TokenizedDoc("d1", ["a", "b", "b"]), TokenizedDoc("d2", ["b"])]
        vocab = build_vocabulary(docs)
        path = tmp_path / "vocab.tsv"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.terms == vocab.terms
        assert loaded.doc_freq == vocab.doc_freq
        assert loaded.total_docs == vocab.total_docs
