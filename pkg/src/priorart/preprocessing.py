"""Text normalization, tokenization, and vocabulary construction.

The character policy is deliberately blunt: after lowercasing, every code
point outside ASCII ``[a-z0-9]`` becomes a separator. Digits are kept
because patent texts lean on figure numbers and measurements.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .exceptions import ParameterError, ValidationError

_SEPARATORS = re.compile(r"[^a-z0-9]+")


def preprocess(raw: str) -> str:
    """Lowercase and reduce to space-separated alphanumeric runs.

    Idempotent: applying it twice changes nothing.
    """
    return _SEPARATORS.sub(" ", raw.lower()).strip()


@dataclass
class TokenizedDoc:
    """An ordered token list for one document section selection."""

    doc_id: str
    tokens: list[str]


def tokenize(doc, section: str = "fulltext") -> TokenizedDoc:
    """Tokenize one section selection of a document.

    ``doc`` is any object with a ``section_text`` method (normally a
    :class:`priorart.corpus.PatentDocument`). Empty sections yield an
    empty token list.
    """
    return TokenizedDoc(doc_id=doc.id, tokens=preprocess(doc.section_text(section)).split())


def tokenize_corpus(docs, section: str = "fulltext") -> list[TokenizedDoc]:
    return [tokenize(doc, section) for doc in docs]


@dataclass
class Vocabulary:
    """Dense term index with per-term document frequencies.

    Term order is first-occurrence order over the corpus the vocabulary was
    built from, so indices are deterministic for a fixed input.
    """

    terms: list[str]
    doc_freq: list[int]
    total_docs: int
    min_count: int = 1
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise ValidationError("vocabulary contains repeated terms")
        if len(self.doc_freq) != len(self.terms):
            raise ValidationError("doc_freq length does not match term count")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def save(self, path) -> None:
        """Write `term<TAB>doc_freq` lines; line number = term index."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#total_docs={self.total_docs}\n")
            for term, df in zip(self.terms, self.doc_freq):
                fh.write(f"{term}\t{df}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        terms: list[str] = []
        freqs: list[int] = []
        total_docs = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    if line.startswith("#total_docs="):
                        total_docs = int(line.split("=", 1)[1])
                    continue
                try:
                    term, df = line.split("\t")
                except ValueError:
                    raise ValidationError(f"{path}: line {lineno}: expected 'term<TAB>doc_freq'")
                terms.append(term)
                freqs.append(int(df))
        if total_docs is None:
            raise ValidationError(f"{path}: missing '#total_docs=' header")
        return cls(terms=terms, doc_freq=freqs, total_docs=total_docs, min_count=1)


def build_vocabulary(docs: list[TokenizedDoc], min_count: int = 1) -> Vocabulary:
    """Build a vocabulary over tokenized documents.

    ``min_count`` is a document-frequency floor: a term is kept only if it
    occurs in at least that many distinct documents.
    """
    if min_count < 1:
        raise ParameterError(f"min_count must be >= 1, got {min_count}")
    df: dict[str, int] = {}
    for doc in docs:
        for term in dict.fromkeys(doc.tokens):
            df[term] = df.get(term, 0) + 1
    terms = [t for t, n in df.items() if n >= min_count]
    return Vocabulary(
        terms=terms,
        doc_freq=[df[t] for t in terms],
        total_docs=len(docs),
        min_count=min_count,
    )
