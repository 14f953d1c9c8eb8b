"""Skip-gram negative-sampling word2vec and PV-DM doc2vec, from scratch.

Both models train with plain SGD on the negative-sampling objective

    loss = -log sigmoid(u_pos . v) - sum_neg log sigmoid(-u_neg . v)

with noise words drawn from the unigram^0.75 distribution and a learning
rate decaying linearly per center position. word2vec predicts each context
word inside a per-position window drawn uniformly from [1, window]; doc2vec
concatenates the document vector with the embeddings of the ``window``
preceding words to predict the next word (missing slots stay zero).

Single-worker training is bit-reproducible for a fixed seed; the optional
data-parallel mode interleaves updates without locks and only guarantees
finite parameters.
"""

from __future__ import annotations

import math
import struct
import threading

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import NumericError, ParameterError, ValidationError
from .features import FeatureVector
from .preprocessing import TokenizedDoc, Vocabulary, build_vocabulary

_W2V_MAGIC = b"PRIORART-W2V\x01"
_D2V_MAGIC = b"PRIORART-D2V\x01"


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def sgns_loss(center_vec, pos_vec, neg_vecs) -> float:
    """Negative-sampling loss for one (center, context, noise-set) triple."""
    center_vec = np.asarray(center_vec, dtype=float)
    s_pos = float(np.dot(pos_vec, center_vec))
    s_negs = np.asarray(neg_vecs, dtype=float) @ center_vec
    return float(np.logaddexp(0.0, -s_pos) + np.logaddexp(0.0, s_negs).sum())


def sgns_gradients(center_vec, pos_vec, neg_vecs):
    """Loss and analytic gradients w.r.t. the center, positive, and noise rows."""
    center_vec = np.asarray(center_vec, dtype=float)
    pos_vec = np.asarray(pos_vec, dtype=float)
    neg_vecs = np.asarray(neg_vecs, dtype=float)
    s_pos = float(np.dot(pos_vec, center_vec))
    s_negs = neg_vecs @ center_vec
    g_pos = _sigmoid(s_pos) - 1.0
    g_negs = _sigmoid(s_negs)
    loss = float(np.logaddexp(0.0, -s_pos) + np.logaddexp(0.0, s_negs).sum())
    grad_center = g_pos * pos_vec + g_negs @ neg_vecs
    return loss, grad_center, g_pos * center_vec, np.outer(g_negs, center_vec)


def pvdm_gradients(doc_vec, context_vecs, target_row, neg_rows):
    """PV-DM loss and gradients for one next-word prediction.

    ``context_vecs`` has one row per context slot (zeros for missing
    slots); the prediction input is the concatenation of the document
    vector with those rows.
    """
    doc_vec = np.asarray(doc_vec, dtype=float)
    context_vecs = np.asarray(context_vecs, dtype=float)
    x = np.concatenate([doc_vec, context_vecs.ravel()])
    loss, grad_x, grad_target, grad_negs = sgns_gradients(x, target_row, neg_rows)
    r = len(doc_vec)
    return loss, grad_x[:r], grad_x[r:].reshape(context_vecs.shape), grad_target, grad_negs


def _step(v, rows):
    """Shared update core: rows[0] positive, rows[1:] noise.

    Returns (loss, grad_v, g) where the gradient for rows[i] is g[i] * v.
    Overflow is deliberate here: a non-finite loss is the divergence signal
    the callers check for.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        scores = rows @ v
        g = _sigmoid(scores)
        g[0] -= 1.0
        loss = float(np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum())
        return loss, g @ rows, g


class _NoiseSampler:
    """Seedless sampler over the unigram^0.75 noise distribution."""

    def __init__(self, token_counts: np.ndarray):
        weights = np.asarray(token_counts, dtype=float) ** 0.75
        total = weights.sum()
        if total <= 0:
            raise ValidationError("noise distribution has no mass")
        self._cum = np.cumsum(weights / total)
        self._cum[-1] = 1.0

    def draw(self, n: int, rng: np.random.Generator, exclude: int) -> np.ndarray:
        """Draw up to n noise indices, skipping any that hit ``exclude``."""
        picks = np.searchsorted(self._cum, rng.random(n), side="right")
        return picks[picks != exclude]


def _filter_docs(docs: list[TokenizedDoc], vocab: Vocabulary) -> list[np.ndarray]:
    index = vocab.index
    return [
        np.array([index[t] for t in doc.tokens if t in index], dtype=np.int64)
        for doc in docs
    ]


def _token_counts(filtered: list[np.ndarray], vocab_size: int) -> np.ndarray:
    counts = np.zeros(vocab_size, dtype=np.int64)
    for ids in filtered:
        np.add.at(counts, ids, 1)
    return counts


def _decayed(alpha: float, min_alpha: float, done: int, total: int) -> float:
    return max(min_alpha, alpha * (1.0 - done / total) if total else min_alpha)


def _check_finite(name: str, *arrays) -> None:
    for arr in arrays:
        if not np.isfinite(arr).all():
            raise NumericError(f"{name} contains non-finite parameters")


class Word2Vec(BaseEstimator):
    """Skip-gram word embeddings trained with negative sampling.

    Parameters follow common word2vec conventions; the defaults are the
    standard setting used throughout (embedding size 200, window 5,
    13 noise words, document-frequency floor 5).

    Attributes
    ----------
    vocab_ : Vocabulary
    W_ : ndarray (vocab, vector_size)
        Input word vectors (the embedding that downstream code consumes).
    W_out_ : ndarray (vocab, vector_size)
        Output vectors; zero-initialized.
    """

    def __init__(self, vector_size: int = 200, window: int = 5, negative: int = 13,
                 min_count: int = 5, epochs: int = 5, alpha: float = 0.025,
                 min_alpha: float = 1e-4, subsample: float = 0.0, workers: int = 1,
                 seed: int = 1):
        self.vector_size = vector_size
        self.window = window
        self.negative = negative
        self.min_count = min_count
        self.epochs = epochs
        self.alpha = alpha
        self.min_alpha = min_alpha
        self.subsample = subsample
        self.workers = workers
        self.seed = seed

    def _validate(self):
        if self.vector_size < 1 or self.window < 1 or self.negative < 1:
            raise ParameterError("vector_size, window, and negative must all be >= 1")
        if self.epochs < 1 or self.min_count < 1 or self.workers < 1:
            raise ParameterError("epochs, min_count, and workers must all be >= 1")

    def fit(self, docs: list[TokenizedDoc], y=None) -> "Word2Vec":
        self._validate()
        if not docs:
            raise ValidationError("cannot train word2vec on an empty corpus")
        self.vocab_ = build_vocabulary(docs, min_count=self.min_count)
        filtered = _filter_docs(docs, self.vocab_)
        total_tokens = int(sum(len(ids) for ids in filtered))
        if len(self.vocab_) == 0 or total_tokens == 0:
            raise ValidationError("no in-vocabulary tokens remain after the frequency floor")
        self.token_counts_ = _token_counts(filtered, len(self.vocab_))

        rng = np.random.default_rng(self.seed)
        size = self.vector_size
        self.W_ = rng.uniform(-0.5 / size, 0.5 / size, size=(len(self.vocab_), size))
        self.W_out_ = np.zeros_like(self.W_)
        sampler = _NoiseSampler(self.token_counts_)

        if self.workers == 1:
            self._train_shard(filtered, sampler, rng, [0], self.epochs * total_tokens)
        else:
            self._train_parallel(filtered, sampler, total_tokens)
        _check_finite("word2vec", self.W_, self.W_out_)
        return self

    def _train_shard(self, filtered, sampler, rng, counter, total) -> None:
        keep_threshold = None
        if self.subsample > 0:
            freq = self.token_counts_ / self.token_counts_.sum()
            ratio = self.subsample / np.maximum(freq, 1e-12)
            keep_threshold = np.minimum(1.0, np.sqrt(ratio) + ratio)
        for _ in range(self.epochs):
            for ids in filtered:
                if keep_threshold is not None and len(ids):
                    ids = ids[rng.random(len(ids)) < keep_threshold[ids]]
                for t in range(len(ids)):
                    lr = _decayed(self.alpha, self.min_alpha, counter[0], total)
                    counter[0] += 1
                    reach = int(rng.integers(1, self.window + 1))
                    center = ids[t]
                    v = self.W_[center]
                    for c in range(max(0, t - reach), min(len(ids), t + reach + 1)):
                        if c == t:
                            continue
                        context = ids[c]
                        negs = sampler.draw(self.negative, rng, exclude=context)
                        rows_idx = np.concatenate(([context], negs))
                        loss, grad_v, g = _step(v, self.W_out_[rows_idx])
                        if not math.isfinite(loss):
                            raise NumericError(
                                f"word2vec training diverged at position {counter[0]}"
                            )
                        np.add.at(self.W_out_, rows_idx, -lr * np.outer(g, v))
                        v -= lr * grad_v
            _check_finite("word2vec", self.W_, self.W_out_)

    def _train_parallel(self, filtered, sampler, total_tokens) -> None:
        # Hogwild-style: shards update shared matrices without locks.
        counter = [0]
        shards = [filtered[w :: self.workers] for w in range(self.workers)]
        threads = [
            threading.Thread(
                target=self._train_shard,
                args=(shard, sampler, np.random.default_rng(self.seed + 7919 * (w + 1)),
                      counter, self.epochs * total_tokens),
            )
            for w, shard in enumerate(shards)
        ]
        for th in threads:
            th.start()
        for th in threads:
            th.join()

    def vector(self, term: str) -> np.ndarray:
        check_is_fitted(self, "W_")
        if term not in self.vocab_.index:
            raise ValidationError(f"term {term!r} is not in the embedding vocabulary")
        return self.W_[self.vocab_.index[term]]

    def save(self, path, vocab_ref: str) -> None:
        """Binary layout: magic, u32 hyperparameters, f64 rates, u64 seed,
        vocab file reference, token counts, then W and W_out row-major
        little-endian float64."""
        check_is_fitted(self, "W_")
        ref = vocab_ref.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_W2V_MAGIC)
            fh.write(struct.pack("<IIIII", self.vector_size, self.window, self.negative,
                                 self.min_count, self.epochs))
            fh.write(struct.pack("<ddd", self.alpha, self.min_alpha, self.subsample))
            fh.write(struct.pack("<Q", self.seed))
            fh.write(struct.pack("<H", len(ref)) + ref)
            fh.write(struct.pack("<I", len(self.vocab_)))
            fh.write(self.token_counts_.astype("<i8").tobytes())
            fh.write(self.W_.astype("<f8").tobytes(order="C"))
            fh.write(self.W_out_.astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "Word2Vec":
        import os

        with open(path, "rb") as fh:
            if fh.read(len(_W2V_MAGIC)) != _W2V_MAGIC:
                raise ValidationError(f"{path}: not a word2vec model file")
            size, window, negative, min_count, epochs = struct.unpack("<IIIII", fh.read(20))
            alpha, min_alpha, subsample = struct.unpack("<ddd", fh.read(24))
            (seed,) = struct.unpack("<Q", fh.read(8))
            (ref_len,) = struct.unpack("<H", fh.read(2))
            ref = fh.read(ref_len).decode("utf-8")
            (n_vocab,) = struct.unpack("<I", fh.read(4))
            counts = np.frombuffer(fh.read(8 * n_vocab), dtype="<i8").copy()
            W = np.frombuffer(fh.read(8 * n_vocab * size), dtype="<f8").reshape(n_vocab, size).copy()
            W_out = np.frombuffer(fh.read(8 * n_vocab * size), dtype="<f8").reshape(n_vocab, size).copy()
        model = cls(vector_size=size, window=window, negative=negative, min_count=min_count,
                    epochs=epochs, alpha=alpha, min_alpha=min_alpha, subsample=subsample, seed=seed)
        model.vocab_ = Vocabulary.load(os.path.join(os.path.dirname(path) or ".", ref))
        model.token_counts_ = counts
        model.W_ = W
        model.W_out_ = W_out
        return model


def compose_doc_vector(bow: FeatureVector, bow_vocab: Vocabulary, model: Word2Vec) -> FeatureVector:
    """Weighted sum of word embeddings: sum_w bow(w) * W[w].

    BOW terms missing from the embedding vocabulary contribute nothing; an
    all-out-of-vocabulary document composes to the zero vector.
    """
    check_is_fitted(model, "W_")
    out = np.zeros(model.vector_size)
    emb_index = model.vocab_.index
    for i, weight in bow.entries.items():
        j = emb_index.get(bow_vocab.terms[i])
        if j is not None:
            out += weight * model.W_[j]
    return FeatureVector.from_dense(bow.doc_id, out)


class Doc2Vec(BaseEstimator):
    """PV-DM document embeddings with input concatenation.

    Every prediction concatenates the document vector with the embeddings
    of the ``window`` preceding words (zero for unavailable slots) and
    scores the next word through a shared output layer against
    ``negative`` noise words.

    Attributes
    ----------
    P_ : ndarray (n_kept_docs, vector_size)
        Document vectors, one row per non-excluded training document.
    W_ : ndarray (vocab, vector_size)
    softmax_ : ndarray (vocab, (1 + window) * vector_size)
    doc_ids_ : list[str]
    """

    def __init__(self, vector_size: int = 50, window: int = 8, negative: int = 13,
                 min_count: int = 5, epochs: int = 18, alpha: float = 0.025,
                 min_alpha: float = 1e-4, workers: int = 1, seed: int = 1):
        self.vector_size = vector_size
        self.window = window
        self.negative = negative
        self.min_count = min_count
        self.epochs = epochs
        self.alpha = alpha
        self.min_alpha = min_alpha
        self.workers = workers
        self.seed = seed

    def _validate(self):
        if self.vector_size < 1 or self.window < 1 or self.negative < 1:
            raise ParameterError("vector_size, window, and negative must all be >= 1")
        if self.epochs < 0 or self.min_count < 1 or self.workers < 1:
            raise ParameterError("epochs must be >= 0; min_count and workers >= 1")

    def fit(self, docs: list[TokenizedDoc], exclude_ids=(), y=None) -> "Doc2Vec":
        self._validate()
        exclude = set(exclude_ids)
        kept = [d for d in docs if d.doc_id not in exclude]
        if not kept:
            raise ValidationError("no documents left to train on after exclusions")
        self.vocab_ = build_vocabulary(kept, min_count=self.min_count)
        if len(self.vocab_) == 0:
            raise ValidationError("no in-vocabulary tokens remain after the frequency floor")
        filtered = _filter_docs(kept, self.vocab_)
        self.token_counts_ = _token_counts(filtered, len(self.vocab_))
        self.doc_ids_ = [d.doc_id for d in kept]

        rng = np.random.default_rng(self.seed)
        size = self.vector_size
        bound = 0.5 / size
        self.P_ = rng.uniform(-bound, bound, size=(len(kept), size))
        self.W_ = rng.uniform(-bound, bound, size=(len(self.vocab_), size))
        self.softmax_ = np.zeros((len(self.vocab_), (1 + self.window) * size))
        sampler = _NoiseSampler(self.token_counts_)
        total = self.epochs * int(sum(len(ids) for ids in filtered))

        if self.workers == 1:
            self._train_shard(list(enumerate(filtered)), sampler, rng, [0], total)
        else:
            counter = [0]
            jobs = list(enumerate(filtered))
            shards = [jobs[w :: self.workers] for w in range(self.workers)]
            threads = [
                threading.Thread(
                    target=self._train_shard,
                    args=(shard, sampler, np.random.default_rng(self.seed + 7919 * (w + 1)),
                          counter, total),
                )
                for w, shard in enumerate(shards)
            ]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
        _check_finite("doc2vec", self.P_, self.W_, self.softmax_)
        return self

    def _train_shard(self, jobs, sampler, rng, counter, total) -> None:
        size = self.vector_size
        for _ in range(self.epochs):
            for row, ids in jobs:
                doc_vec = self.P_[row]
                for t in range(len(ids)):
                    lr = _decayed(self.alpha, self.min_alpha, counter[0], total)
                    counter[0] += 1
                    target = ids[t]
                    context = ids[max(0, t - self.window) : t]
                    negs = sampler.draw(self.negative, rng, exclude=target)
                    rows_idx = np.concatenate(([target], negs))
                    x = np.zeros((1 + self.window) * size)
                    x[:size] = doc_vec
                    offset = (self.window - len(context) + 1) * size
                    for k, w in enumerate(context):
                        x[offset + k * size : offset + (k + 1) * size] = self.W_[w]
                    loss, grad_x, g = _step(x, self.softmax_[rows_idx])
                    if not math.isfinite(loss):
                        raise NumericError(f"doc2vec training diverged at position {counter[0]}")
                    np.add.at(self.softmax_, rows_idx, -lr * np.outer(g, x))
                    doc_vec -= lr * grad_x[:size]
                    for k, w in enumerate(context):
                        self.W_[w] -= lr * grad_x[offset + k * size : offset + (k + 1) * size]
            _check_finite("doc2vec", self.P_, self.W_, self.softmax_)

    def doc_vector(self, doc_id: str) -> np.ndarray:
        check_is_fitted(self, "P_")
        try:
            return self.P_[self.doc_ids_.index(doc_id)]
        except ValueError:
            raise ValidationError(f"document {doc_id!r} has no trained vector") from None

    def infer(self, doc: TokenizedDoc, steps: int | None = None, seed: int = 1) -> FeatureVector:
        """Optimize a vector for a new document against frozen parameters."""
        check_is_fitted(self, "P_")
        if steps is None:
            steps = self.epochs
        if steps < 0:
            raise ParameterError(f"steps must be >= 0, got {steps}")
        ids = np.array([self.vocab_.index[t] for t in doc.tokens if t in self.vocab_.index],
                       dtype=np.int64)
        if len(ids) == 0:
            raise ValidationError(
                f"cannot infer a vector for {doc.doc_id!r}: every token is out of vocabulary"
            )
        rng = np.random.default_rng(seed)
        size = self.vector_size
        doc_vec = rng.uniform(-0.5 / size, 0.5 / size, size=size)
        sampler = _NoiseSampler(self.token_counts_)
        total = steps * len(ids)
        done = 0
        for _ in range(steps):
            for t in range(len(ids)):
                lr = _decayed(self.alpha, self.min_alpha, done, total)
                done += 1
                target = ids[t]
                context = ids[max(0, t - self.window) : t]
                negs = sampler.draw(self.negative, rng, exclude=target)
                rows_idx = np.concatenate(([target], negs))
                x = np.zeros((1 + self.window) * size)
                x[:size] = doc_vec
                offset = (self.window - len(context) + 1) * size
                for k, w in enumerate(context):
                    x[offset + k * size : offset + (k + 1) * size] = self.W_[w]
                loss, grad_x, _ = _step(x, self.softmax_[rows_idx])
                if not math.isfinite(loss):
                    raise NumericError(f"doc2vec inference diverged at position {done}")
                doc_vec -= lr * grad_x[:size]
        return FeatureVector.from_dense(doc.doc_id, doc_vec)

    def save(self, path, vocab_ref: str) -> None:
        """Binary layout mirrors the word2vec file, plus the document id
        table, P, and the output layer."""
        check_is_fitted(self, "P_")
        ref = vocab_ref.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_D2V_MAGIC)
            fh.write(struct.pack("<IIIII", self.vector_size, self.window, self.negative,
                                 self.min_count, self.epochs))
            fh.write(struct.pack("<dd", self.alpha, self.min_alpha))
            fh.write(struct.pack("<Q", self.seed))
            fh.write(struct.pack("<H", len(ref)) + ref)
            fh.write(struct.pack("<II", len(self.vocab_), len(self.doc_ids_)))
            for doc_id in self.doc_ids_:
                encoded = doc_id.encode("utf-8")
                fh.write(struct.pack("<H", len(encoded)) + encoded)
            fh.write(self.token_counts_.astype("<i8").tobytes())
            fh.write(self.W_.astype("<f8").tobytes(order="C"))
            fh.write(self.P_.astype("<f8").tobytes(order="C"))
            fh.write(self.softmax_.astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "Doc2Vec":
        import os

        with open(path, "rb") as fh:
            if fh.read(len(_D2V_MAGIC)) != _D2V_MAGIC:
                raise ValidationError(f"{path}: not a doc2vec model file")
            size, window, negative, min_count, epochs = struct.unpack("<IIIII", fh.read(20))
            alpha, min_alpha = struct.unpack("<dd", fh.read(16))
            (seed,) = struct.unpack("<Q", fh.read(8))
            (ref_len,) = struct.unpack("<H", fh.read(2))
            ref = fh.read(ref_len).decode("utf-8")
            n_vocab, n_docs = struct.unpack("<II", fh.read(8))
            doc_ids = []
            for _ in range(n_docs):
                (id_len,) = struct.unpack("<H", fh.read(2))
                doc_ids.append(fh.read(id_len).decode("utf-8"))
            counts = np.frombuffer(fh.read(8 * n_vocab), dtype="<i8").copy()
            W = np.frombuffer(fh.read(8 * n_vocab * size), dtype="<f8").reshape(n_vocab, size).copy()
            P = np.frombuffer(fh.read(8 * n_docs * size), dtype="<f8").reshape(n_docs, size).copy()
            sm_cols = (1 + window) * size
            softmax = np.frombuffer(fh.read(8 * n_vocab * sm_cols), dtype="<f8").reshape(n_vocab, sm_cols).copy()
        model = cls(vector_size=size, window=window, negative=negative, min_count=min_count,
                    epochs=epochs, alpha=alpha, min_alpha=min_alpha, seed=seed)
        model.vocab_ = Vocabulary.load(os.path.join(os.path.dirname(path) or ".", ref))
        model.token_counts_ = counts
        model.doc_ids_ = doc_ids
        model.W_ = W
        model.P_ = P
        model.softmax_ = softmax
        return model
