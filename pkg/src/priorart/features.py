"""Sparse bag-of-words features: term frequency, binary, idf weighting.

Weights use natural-log idf. The term-frequency denominator is the
document's in-vocabulary token count; out-of-vocabulary tokens are
ignored everywhere.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import ParameterError, ValidationError
from .preprocessing import TokenizedDoc, Vocabulary, build_vocabulary

COUNTINGS = ("tf", "binary")
NORMS = ("length", "max", None)


@dataclass
class FeatureVector:
    """Sparse weighted feature vector for one document.

    ``entries`` maps feature index to weight and never stores explicit
    zeros. Dense vectors (reduced or embedded documents) round-trip through
    :meth:`from_dense` / :meth:`to_dense`.
    """

    doc_id: str
    entries: dict[int, float]
    dim: int

    @classmethod
    def from_dense(cls, doc_id: str, values) -> "FeatureVector":
        arr = np.asarray(values, dtype=float)
        return cls(doc_id, {int(i): float(v) for i, v in enumerate(arr) if v != 0.0}, arr.shape[0])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        for i, v in self.entries.items():
            out[i] = v
        return out

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.entries.values()))

    def scaled(self, factor: float) -> "FeatureVector":
        return FeatureVector(self.doc_id, {i: v * factor for i, v in self.entries.items()}, self.dim)


@dataclass
class FeatureMatrix:
    """Feature vectors sharing one dimensionality, in stable row order."""

    rows: list[FeatureVector]
    dim: int

    def __post_init__(self):
        for row in self.rows:
            if row.dim != self.dim:
                raise ValidationError(
                    f"row {row.doc_id!r} has dim {row.dim}, expected {self.dim}"
                )

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def row_ids(self) -> list[str]:
        return [row.doc_id for row in self.rows]

    def feature_map(self) -> dict[str, FeatureVector]:
        return {row.doc_id: row for row in self.rows}

    def to_dense(self) -> np.ndarray:
        out = np.zeros((len(self.rows), self.dim))
        for r, row in enumerate(self.rows):
            for i, v in row.entries.items():
                out[r, i] = v
        return out

    def to_csr(self) -> sparse.csr_matrix:
        data, indices, indptr = [], [], [0]
        for row in self.rows:
            for i in sorted(row.entries):
                indices.append(i)
                data.append(row.entries[i])
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(len(self.rows), self.dim),
        )

    def save(self, path) -> None:
        """Sparse triplet text format, weights at 9 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#dim={self.dim} rows={len(self.rows)}\n")
            for row in self.rows:
                cells = " ".join(f"{i}:{row.entries[i]:.9g}" for i in sorted(row.entries))
                fh.write(f"{row.doc_id}\t{cells}\n")

    @classmethod
    def load(cls, path) -> "FeatureMatrix":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("#dim="):
                raise ValidationError(f"{path}: missing '#dim=' header")
            try:
                dim_part, rows_part = header[1:].split(" ")
                dim = int(dim_part.split("=")[1])
                n_rows = int(rows_part.split("=")[1])
            except (ValueError, IndexError):
                raise ValidationError(f"{path}: malformed header {header!r}") from None
            rows = []
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                doc_id, _, cells = line.partition("\t")
                entries = {}
                for cell in cells.split():
                    idx, _, weight = cell.partition(":")
                    entries[int(idx)] = float(weight)
                rows.append(FeatureVector(doc_id, entries, dim))
        if len(rows) != n_rows:
            raise ValidationError(f"{path}: header says {n_rows} rows, found {len(rows)}")
        return cls(rows=rows, dim=dim)


@dataclass
class BowConfig:
    """Counting/weighting/normalization choices for BOW features."""

    counting: str = "tf"
    use_idf: bool = True
    norm: str | None = "length"

    def __post_init__(self):
        if self.counting not in COUNTINGS:
            raise ParameterError(f"counting must be one of {COUNTINGS}, got {self.counting!r}")
        if self.norm not in NORMS:
            raise ParameterError(f"norm must be one of {NORMS}, got {self.norm!r}")


def term_frequency(doc: TokenizedDoc, vocab: Vocabulary) -> FeatureVector:
    """Relative in-vocabulary term counts for one document."""
    counts = Counter(vocab.index[t] for t in doc.tokens if t in vocab.index)
    total = sum(counts.values())
    if total == 0:
        return FeatureVector(doc.doc_id, {}, len(vocab))
    return FeatureVector(doc.doc_id, {i: n / total for i, n in counts.items()}, len(vocab))


def idf(vocab: Vocabulary, term_index: int) -> float:
    """Natural-log inverse document frequency of one vocabulary term."""
    df = vocab.doc_freq[term_index]
    if df < 1:
        raise ValidationError(f"term index {term_index} has document frequency 0")
    return math.log(vocab.total_docs / df)


def build_features(docs: list[TokenizedDoc], vocab: Vocabulary, cfg: BowConfig) -> FeatureMatrix:
    """Vectorize documents per the configured counting, idf, and norm."""
    rows = []
    for doc in docs:
        if cfg.counting == "tf":
            vec = term_frequency(doc, vocab)
        else:
            present = {vocab.index[t] for t in doc.tokens if t in vocab.index}
            vec = FeatureVector(doc.doc_id, {i: 1.0 for i in present}, len(vocab))
        if cfg.use_idf:
            entries = {}
            for i, v in vec.entries.items():
                w = v * idf(vocab, i)
                if w != 0.0:
                    entries[i] = w
            vec = FeatureVector(doc.doc_id, entries, len(vocab))
        rows.append(_normalize(vec, cfg.norm))
    return FeatureMatrix(rows=rows, dim=len(vocab))


def _normalize(vec: FeatureVector, norm: str | None) -> FeatureVector:
    if norm is None or not vec.entries:
        return vec
    if norm == "length":
        scale = vec.norm()
    elif norm == "max":
        scale = max(vec.entries.values())
    else:
        raise ParameterError(f"unknown norm {norm!r}")
    if scale == 0.0:
        return vec
    return vec.scaled(1.0 / scale)


class BowVectorizer(BaseEstimator, TransformerMixin):
    """Bag-of-words vectorizer over pre-tokenized documents.

    Parameters
    ----------
    counting : {"tf", "binary"}
        Relative term counts, or presence flags.
    use_idf : bool
        Multiply each entry by the term's natural-log inverse document
        frequency.
    norm : {"length", "max", None}
        Final per-vector normalization; zero vectors pass through.
    min_count : int
        Document-frequency floor for the fitted vocabulary.

    Attributes
    ----------
    vocabulary_ : Vocabulary
        Term index and document frequencies learned by ``fit``.
    """

    def __init__(self, counting: str = "tf", use_idf: bool = True,
                 norm: str | None = "length", min_count: int = 1):
        self.counting = counting
        self.use_idf = use_idf
        self.norm = norm
        self.min_count = min_count

    def _config(self) -> BowConfig:
        return BowConfig(counting=self.counting, use_idf=self.use_idf, norm=self.norm)

    def fit(self, docs: list[TokenizedDoc], y=None) -> "BowVectorizer":
        self._config()
        self.vocabulary_ = build_vocabulary(docs, min_count=self.min_count)
        return self

    def transform(self, docs: list[TokenizedDoc]) -> FeatureMatrix:
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "vocabulary_")
        return build_features(docs, self.vocabulary_, self._config())

    @classmethod
    def from_vocabulary(cls, vocab: Vocabulary, **params) -> "BowVectorizer":
        """Rebuild a fitted vectorizer around a persisted vocabulary."""
        est = cls(**params)
        est.vocabulary_ = vocab
        return est
