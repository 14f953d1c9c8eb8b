"""Corpus ingestion, validation, and labeled pair-dataset construction.

A corpus is a JSONL file holding one patent record per line. Pair datasets
come in two kinds: cited/random pairs derived from search-report citations,
and expert relevance-scored pairs loaded from CSV.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError, ValidationError
from .preprocessing import preprocess

SECTIONS = ("fulltext", "abstract", "claims", "description", "title_abstract")

LABEL_CITED = "cited"
LABEL_RANDOM = "random"
LABEL_DUPLICATE = "duplicate"

_REQUIRED_FIELDS = ("id", "title", "abstract", "claims", "description", "pub_year", "category", "cited_ids")


@dataclass
class PatentDocument:
    """One patent grant or application with its search-report citations."""

    id: str
    title: str
    abstract: str
    claims: str
    description: str
    pub_year: int
    category: str
    cited_ids: list[str]

    def validate(self) -> None:
        if not self.id:
            raise ValidationError("document id must be non-empty")
        if not isinstance(self.pub_year, int) or self.pub_year <= 0:
            raise ValidationError(f"document {self.id!r}: pub_year must be a positive integer")
        if self.id in self.cited_ids:
            raise ValidationError(f"document {self.id!r}: cites itself")
        if not (self.abstract or self.claims or self.description):
            raise ValidationError(f"document {self.id!r}: abstract, claims and description are all empty")

    def section_text(self, section: str = "fulltext") -> str:
        """Return the text of one section selection.

        ``fulltext`` is title, abstract, claims, and description in that
        order, joined with single spaces.
        """
        if section == "fulltext":
            return " ".join((self.title, self.abstract, self.claims, self.description))
        if section == "abstract":
            return self.abstract
        if section == "claims":
            return self.claims
        if section == "description":
            return self.description
        if section == "title_abstract":
            return " ".join((self.title, self.abstract))
        raise ParameterError(f"unknown section {section!r}; expected one of {SECTIONS}")


class CorpusStore:
    """In-memory corpus indexed by document id. Immutable after load."""

    def __init__(self, docs: list[PatentDocument]):
        self._docs: dict[str, PatentDocument] = {}
        for doc in docs:
            doc.validate()
            if doc.id in self._docs:
                raise ValidationError(f"duplicate document id {doc.id!r}")
            self._docs[doc.id] = doc

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def __iter__(self):
        return iter(self._docs.values())

    def get(self, doc_id: str) -> PatentDocument:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise ValidationError(f"unknown document id {doc_id!r}") from None

    def ids(self) -> list[str]:
        return list(self._docs.keys())


def load_corpus(path) -> CorpusStore:
    """Load a JSONL corpus file, validating every record.

    Unknown fields are ignored. Errors carry the offending line number.
    """
    docs: list[PatentDocument] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: malformed JSON ({exc.msg})") from exc
            for name in _REQUIRED_FIELDS:
                if name not in record:
                    raise ValidationError(f"{path}: line {lineno}: missing required field {name!r}")
            doc = PatentDocument(
                id=str(record["id"]),
                title=str(record["title"]),
                abstract=str(record["abstract"]),
                claims=str(record["claims"]),
                description=str(record["description"]),
                pub_year=record["pub_year"],
                category=str(record["category"]),
                cited_ids=[str(c) for c in record["cited_ids"]],
            )
            try:
                doc.validate()
            except ValidationError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}") from None
            if doc.id in seen:
                raise ValidationError(f"{path}: line {lineno}: duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return CorpusStore(docs)


def save_corpus(store: CorpusStore, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in store:
            fh.write(json.dumps(doc.__dict__, sort_keys=True) + "\n")


@dataclass
class LabeledPair:
    """A (target, other) document pair with either a label or a 0-5 score.

    Relevance-scored pairs may additionally carry the cited/random flag of
    the pair they were subsampled from.
    """

    target_id: str
    other_id: str
    label: str | None = None
    relevance_score: int | None = None


@dataclass
class PairDataset:
    """A list of labeled pairs plus per-label counts."""

    kind: str  # "cited_random" | "relevance"
    pairs: list[LabeledPair]
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("cited_random", "relevance"):
            raise ParameterError(f"unknown pair dataset kind {self.kind!r}")
        if not self.counts:
            self.counts = dict(Counter(p.label for p in self.pairs if p.label is not None))
        seen = set()
        for p in self.pairs:
            key = (p.target_id, p.other_id)
            if key in seen:
                raise ValidationError(f"duplicate pair entry {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.pairs)

    def binary_labels(self, threshold: int = 2) -> list[str]:
        """Binarized view of a relevance dataset: relevant iff score > threshold."""
        if self.kind != "relevance":
            raise ValidationError("binary_labels applies to relevance datasets only")
        return ["relevant" if p.relevance_score > threshold else "irrelevant" for p in self.pairs]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            if self.kind == "cited_random":
                writer.writerow(["target_id", "other_id", "label"])
                for p in self.pairs:
                    writer.writerow([p.target_id, p.other_id, p.label])
            else:
                writer.writerow(["target_id", "other_id", "score", "label"])
                for p in self.pairs:
                    writer.writerow([p.target_id, p.other_id, p.relevance_score, p.label or ""])


def load_cited_random_pairs(path, store: CorpusStore | None = None) -> PairDataset:
    """Read a `target_id,other_id,label` CSV back into a PairDataset."""
    pairs = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader, path, ("target_id", "other_id", "label"))
        for row in reader:
            label = row["label"].strip().lower()
            if label not in (LABEL_CITED, LABEL_RANDOM, LABEL_DUPLICATE):
                raise ValidationError(f"{path}: unknown pair label {label!r}")
            pairs.append(LabeledPair(row["target_id"], row["other_id"], label=label))
    dataset = PairDataset(kind="cited_random", pairs=pairs)
    if store is not None:
        _check_ids_resolve(dataset, store)
    return dataset


def load_relevance_pairs(path, threshold: int = 2, store: CorpusStore | None = None) -> PairDataset:
    """Load expert relevance scores from a `target_id,other_id,score[,label]` CSV.

    Scores are integers 0-5; the binarized view treats score > ``threshold``
    as relevant. When ``store`` is given, every id must resolve in it.
    """
    if not 0 <= threshold <= 5:
        raise ParameterError(f"threshold must be in [0, 5], got {threshold}")
    pairs = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader, path, ("target_id", "other_id", "score"))
        has_label = "label" in (reader.fieldnames or ())
        for row in reader:
            try:
                score = int(row["score"])
            except ValueError:
                raise ValidationError(f"{path}: non-integer score {row['score']!r}") from None
            if not 0 <= score <= 5:
                raise ValidationError(f"{path}: score {score} outside [0, 5]")
            label = row["label"].strip().lower() or None if has_label else None
            pairs.append(LabeledPair(row["target_id"], row["other_id"], label=label, relevance_score=score))
    dataset = PairDataset(kind="relevance", pairs=pairs)
    if store is not None:
        _check_ids_resolve(dataset, store)
    return dataset


def _require_columns(reader: csv.DictReader, path, names) -> None:
    missing = [n for n in names if n not in (reader.fieldnames or ())]
    if missing:
        raise ValidationError(f"{path}: missing CSV column(s) {missing}")


def _check_ids_resolve(dataset: PairDataset, store: CorpusStore) -> None:
    unknown = sorted(
        {i for p in dataset.pairs for i in (p.target_id, p.other_id) if i not in store}
    )
    if unknown:
        raise ValidationError(f"pair dataset references unknown document id(s): {unknown}")


def build_cited_random_pairs(
    store: CorpusStore, target_year: int, n_random: int, seed: int
) -> PairDataset:
    """Pair every target-year document with its citations and a shared random set.

    Targets are all documents published in ``target_year``. Each target is
    paired with (a) every cited document present in the store, labeled
    cited, and (b) one globally sampled set of ``n_random`` documents that
    are cited by no target and are not targets themselves, labeled random.
    Pairs whose preprocessed full texts are byte-identical are relabeled
    duplicate. Citations pointing outside the store are skipped.
    """
    targets = [doc for doc in store if doc.pub_year == target_year]
    if not targets:
        raise ValidationError(f"no documents published in target year {target_year}")
    target_ids = {doc.id for doc in targets}
    cited_by_any = {c for doc in targets for c in doc.cited_ids}
    eligible = [d.id for d in store if d.id not in cited_by_any and d.id not in target_ids]
    if len(eligible) < n_random:
        raise ValidationError(
            f"requested {n_random} random documents but only {len(eligible)} are eligible"
        )
    rng = np.random.default_rng(seed)
    random_ids = [eligible[i] for i in sorted(rng.choice(len(eligible), size=n_random, replace=False))]

    text_key: dict[str, str] = {}

    def key(doc_id: str) -> str:
        if doc_id not in text_key:
            text_key[doc_id] = preprocess(store.get(doc_id).section_text("fulltext"))
        return text_key[doc_id]

    pairs: list[LabeledPair] = []
    for target in targets:
        for cited_id in dict.fromkeys(target.cited_ids):
            if cited_id not in store:
                continue
            label = LABEL_DUPLICATE if key(target.id) == key(cited_id) else LABEL_CITED
            pairs.append(LabeledPair(target.id, cited_id, label=label))
        for rand_id in random_ids:
            label = LABEL_DUPLICATE if key(target.id) == key(rand_id) else LABEL_RANDOM
            pairs.append(LabeledPair(target.id, rand_id, label=label))
    return PairDataset(kind="cited_random", pairs=pairs)


def generate_synthetic_corpus(
    n_topics: int,
    docs_per_topic: int,
    vocab_per_topic: int,
    noise_vocab: int,
    seed: int,
    duplicates_per_topic: int = 0,
) -> tuple[CorpusStore, dict[str, int]]:
    """Generate a topic-clustered corpus with citation structure.

    Each topic owns a private vocabulary; every document carries a small
    signature sub-vocabulary and inherits part of its parents' signatures,
    so cited pairs overlap lexically far more than same-topic strangers.
    Documents cite only earlier same-topic documents. With
    ``duplicates_per_topic`` = k, the last k pre-final-year documents of
    each topic get a byte-identical twin published in the final year that
    cites its original — the twin pairs that downstream labeling marks as
    duplicates.

    Returns the store and a ground-truth doc_id -> topic mapping (the topic
    is also recorded as the document category).
    """
    for name, value in (
        ("n_topics", n_topics),
        ("docs_per_topic", docs_per_topic),
        ("vocab_per_topic", vocab_per_topic),
        ("noise_vocab", noise_vocab),
    ):
        if value < 1:
            raise ParameterError(f"{name} must be >= 1, got {value}")
    if duplicates_per_topic < 0:
        raise ParameterError("duplicates_per_topic must be >= 0")
    if duplicates_per_topic > max(docs_per_topic - 1, 0):
        raise ParameterError(
            "duplicates_per_topic must leave at least one earlier document to twin"
        )

    rng = np.random.default_rng(seed)
    noise_words = [f"noise{j:03d}" for j in range(noise_vocab)]
    docs: list[PatentDocument] = []
    topic_of: dict[str, int] = {}
    final_year = 2000 + docs_per_topic - 1

    for t in range(n_topics):
        topic_words = [f"t{t:02d}w{j:03d}" for j in range(vocab_per_topic)]
        category = f"T{t:02d}"
        signatures: list[np.ndarray] = []
        topic_docs: list[PatentDocument] = []
        for i in range(docs_per_topic):
            doc_id = f"SYN-{t:02d}-{i:03d}"
            sig_size = min(15, vocab_per_topic)
            signature = rng.choice(vocab_per_topic, size=sig_size, replace=False)
            if i == 0:
                parents: list[int] = []
            else:
                n_parents = int(rng.integers(1, min(i, 4) + 1))
                parents = sorted(rng.choice(i, size=n_parents, replace=False).tolist())
            tokens: list[str] = []
            # ~45% own signature, ~25% inherited, ~15% topic filler, ~15% noise
            tokens += [topic_words[j] for j in rng.choice(signature, size=70)]
            if parents:
                inherited = np.concatenate([signatures[p] for p in parents])
                tokens += [topic_words[j] for j in rng.choice(inherited, size=40)]
            tokens += [topic_words[j] for j in rng.choice(vocab_per_topic, size=25)]
            tokens += [noise_words[j] for j in rng.choice(noise_vocab, size=25)]
            doc = PatentDocument(
                id=doc_id,
                title=" ".join(tokens[:6]),
                abstract=" ".join(tokens[6:40]),
                claims=" ".join(tokens[40:80]),
                description=" ".join(tokens[80:]),
                pub_year=2000 + i,
                category=category,
                cited_ids=[topic_docs[p].id for p in parents],
            )
            signatures.append(signature)
            topic_docs.append(doc)
            topic_of[doc_id] = t
        for k in range(1, duplicates_per_topic + 1):
            original = topic_docs[docs_per_topic - 1 - k]
            twin = PatentDocument(
                id=f"{original.id}-DUP",
                title=original.title,
                abstract=original.abstract,
                claims=original.claims,
                description=original.description,
                pub_year=final_year,
                category=category,
                cited_ids=[original.id],
            )
            topic_docs.append(twin)
            topic_of[twin.id] = t
        docs.extend(topic_docs)
    return CorpusStore(docs), topic_of
