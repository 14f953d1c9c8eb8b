"""End-to-end orchestration: featurize a corpus, score pairs, evaluate, search.

A run is described by a JSON-serializable :class:`RunConfig`. Rerunning the
same config and seed reproduces every artifact byte for byte (single-worker
mode). Embedding models can be cached by content hash to skip retraining.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

from .corpus import CorpusStore, PairDataset, PatentDocument, SECTIONS, load_corpus
from .decomposition import KernelPca, Lsa
from .embeddings import Doc2Vec, Word2Vec, compose_doc_vector
from .exceptions import ParameterError, StageError, ValidationError
from .features import BowConfig, BowVectorizer, FeatureMatrix, FeatureVector, build_features
from .measures import MeasureSpec, parse_measure, save_scored_pairs, score_pairs
from .metrics import evaluate_scored_pairs, score_histograms
from .preprocessing import Vocabulary, tokenize, tokenize_corpus

FEATURE_METHODS = ("bow", "lsa", "kpca", "bow_word2vec", "doc2vec")

_MANIFEST = "manifest.json"


@dataclass
class RunConfig:
    """Everything one evaluation or featurization run depends on.

    ``word2vec`` and ``doc2vec`` hold keyword overrides for the respective
    estimators; unset hyperparameters keep the standard defaults.
    """

    corpus_path: str = ""
    section: str = "fulltext"
    feature_method: str = "bow"
    bow: BowConfig = field(default_factory=BowConfig)
    bow_min_count: int = 1
    n_components: int = 100
    word2vec: dict = field(default_factory=dict)
    doc2vec: dict = field(default_factory=dict)
    measure: str = "coefficient:cosine"
    relevance_threshold: int = 2
    bins: int = 50
    seed: int = 0
    output_dir: str = "."
    cache_dir: str | None = None

    def __post_init__(self):
        if self.section not in SECTIONS:
            raise ParameterError(f"unknown section {self.section!r}; expected one of {SECTIONS}")
        if self.feature_method not in FEATURE_METHODS:
            raise ParameterError(
                f"unknown feature_method {self.feature_method!r}; expected one of {FEATURE_METHODS}"
            )
        parse_measure(self.measure)

    def measure_spec(self) -> MeasureSpec:
        return parse_measure(self.measure)

    def echo(self) -> dict:
        """Config view embedded in reports: no machine-local paths."""
        out = dataclasses.asdict(self)
        out.pop("output_dir")
        out.pop("cache_dir")
        return out

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config key(s): {unknown}")
        data = dict(data)
        if "bow" in data and isinstance(data["bow"], dict):
            data["bow"] = BowConfig(**data["bow"])
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON config ({exc.msg})") from exc
        return cls.from_dict(data)


def corpus_digest(store: CorpusStore) -> str:
    h = hashlib.sha256()
    for doc in store:
        h.update(json.dumps(doc.__dict__, sort_keys=True).encode("utf-8"))
    return h.hexdigest()


class _Cache:
    def __init__(self, cache_dir: str | None):
        self.dir = cache_dir
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)

    def key(self, *parts: str) -> str:
        return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()

    def path(self, key: str, suffix: str) -> str | None:
        return os.path.join(self.dir, f"{key}{suffix}") if self.dir else None


@dataclass
class Featurized:
    """Feature vectors plus every fitted object needed to featurize a query."""

    method: str
    section: str
    vectors: dict[str, FeatureVector]
    bow_vocab: Vocabulary | None = None
    bow_config: BowConfig | None = None
    bow_matrix: FeatureMatrix | None = None
    lsa: Lsa | None = None
    kpca: KernelPca | None = None
    word2vec: Word2Vec | None = None
    doc2vec: Doc2Vec | None = None
    infer_seed: int = 0

    def featurize_query(self, doc: PatentDocument) -> FeatureVector:
        tokens = tokenize(doc, self.section)
        if self.method == "doc2vec":
            return self.doc2vec.infer(tokens, seed=self.infer_seed)
        bow = build_features([tokens], self.bow_vocab, self.bow_config).rows[0]
        if self.method == "bow":
            return bow
        if self.method == "lsa":
            return self.lsa.transform_vector(bow)
        if self.method == "kpca":
            return self.kpca.transform_vector(bow)
        return compose_doc_vector(bow, self.bow_vocab, self.word2vec)


def compute_features(
    store: CorpusStore,
    config: RunConfig,
    doc2vec_exclude: set[str] | frozenset[str] = frozenset(),
) -> Featurized:
    """Build the configured representation for every document in the store.

    For doc2vec, ids in ``doc2vec_exclude`` are withheld from training and
    their vectors inferred afterwards against the frozen model.
    """
    docs = tokenize_corpus(store, config.section)
    cache = _Cache(config.cache_dir)
    digest = corpus_digest(store)

    result = Featurized(method=config.feature_method, section=config.section,
                        vectors={}, infer_seed=config.seed)

    if config.feature_method == "doc2vec":
        params = {"seed": config.seed, **config.doc2vec}
        model = _cached_doc2vec(docs, sorted(doc2vec_exclude), params, cache, digest, config.section)
        result.doc2vec = model
        vectors = {
            doc_id: FeatureVector.from_dense(doc_id, model.P_[i])
            for i, doc_id in enumerate(model.doc_ids_)
        }
        by_id = {d.doc_id: d for d in docs}
        for doc_id in sorted(doc2vec_exclude):
            vectors[doc_id] = model.infer(by_id[doc_id], seed=config.seed)
        result.vectors = vectors
        return result

    vectorizer = BowVectorizer(counting=config.bow.counting, use_idf=config.bow.use_idf,
                               norm=config.bow.norm, min_count=config.bow_min_count)
    bow_matrix = vectorizer.fit(docs).transform(docs)
    result.bow_vocab = vectorizer.vocabulary_
    result.bow_config = config.bow
    result.bow_matrix = bow_matrix

    if config.feature_method == "bow":
        result.vectors = bow_matrix.feature_map()
    elif config.feature_method == "lsa":
        result.lsa = Lsa(n_components=config.n_components, random_state=config.seed).fit(bow_matrix)
        result.vectors = result.lsa.transform(bow_matrix).feature_map()
    elif config.feature_method == "kpca":
        result.kpca = KernelPca(n_components=config.n_components).fit(bow_matrix)
        result.vectors = result.kpca.transform(bow_matrix).feature_map()
    else:  # bow_word2vec
        params = {"seed": config.seed, **config.word2vec}
        model = _cached_word2vec(docs, params, cache, digest, config.section)
        result.word2vec = model
        result.vectors = {
            row.doc_id: compose_doc_vector(row, vectorizer.vocabulary_, model)
            for row in bow_matrix.rows
        }
    return result


def _cached_word2vec(docs, params, cache: _Cache, digest: str, section: str) -> Word2Vec:
    key = cache.key("w2v", digest, section, json.dumps(params, sort_keys=True))
    path = cache.path(key, ".w2v")
    if path and os.path.exists(path):
        return Word2Vec.load(path)
    model = Word2Vec(**params).fit(docs)
    if path:
        model.vocab_.save(cache.path(key, ".vocab"))
        model.save(path, vocab_ref=f"{key}.vocab")
    return model


def _cached_doc2vec(docs, exclude, params, cache: _Cache, digest: str, section: str) -> Doc2Vec:
    key = cache.key("d2v", digest, section, json.dumps(exclude), json.dumps(params, sort_keys=True))
    path = cache.path(key, ".d2v")
    if path and os.path.exists(path):
        return Doc2Vec.load(path)
    model = Doc2Vec(**params).fit(docs, exclude_ids=exclude)
    if path:
        model.vocab_.save(cache.path(key, ".vocab"))
        model.save(path, vocab_ref=f"{key}.vocab")
    return model


def cmd_pipeline(config: RunConfig, pairs: PairDataset, store: CorpusStore | None = None):
    """Run featurize -> score -> evaluate and write the run artifacts.

    Emits report.json, scores.csv, roc.csv, and histogram.csv into the
    config's output directory. On failure, partially written artifacts are
    removed and the failing stage is named.
    """
    written: list[str] = []

    def _stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            for path in written:
                if os.path.exists(path):
                    os.remove(path)
            raise StageError(name, exc) from exc

    if store is None:
        store = _stage("ingest", load_corpus, config.corpus_path)
    _stage("validate", _check_pairs_resolve, pairs, store)

    exclude = frozenset()
    if config.feature_method == "doc2vec":
        exclude = frozenset(p.target_id for p in pairs.pairs)
    featurized = _stage("featurize", compute_features, store, config, exclude)
    scored = _stage(
        "score", score_pairs, pairs, featurized.vectors, config.measure_spec(),
        config.relevance_threshold,
    )

    if pairs.kind == "relevance":
        positive, negative = "relevant", "irrelevant"
    else:
        positive, negative = "cited", "random"
    report = _stage(
        "evaluate", evaluate_scored_pairs, scored, positive, negative,
        str(config.measure_spec()), pairs.kind, config.echo(),
    )
    histogram = _stage("evaluate", score_histograms, scored, config.bins)

    def _write():
        os.makedirs(config.output_dir, exist_ok=True)
        for name, saver in (
            ("report.json", report.save),
            ("scores.csv", lambda p: save_scored_pairs(scored, p)),
            ("roc.csv", report.save_roc),
            ("histogram.csv", histogram.save),
        ):
            path = os.path.join(config.output_dir, name)
            written.append(path)
            saver(path)

    _stage("write", _write)
    return report


def _check_pairs_resolve(pairs: PairDataset, store: CorpusStore) -> None:
    unknown = sorted(
        {i for p in pairs.pairs for i in (p.target_id, p.other_id) if i not in store}
    )
    if unknown:
        raise ValidationError(f"pair dataset references unknown document id(s): {unknown}")


def cmd_stats(store: CorpusStore) -> dict:
    """Corpus summary: sizes, per-year/category counts, token statistics."""
    import numpy as np

    token_counts = [len(tokenize(doc, "fulltext").tokens) for doc in store]
    by_year: dict[int, int] = {}
    by_category: dict[str, int] = {}
    citation_hist: dict[int, int] = {}
    for doc in store:
        by_year[doc.pub_year] = by_year.get(doc.pub_year, 0) + 1
        by_category[doc.category] = by_category.get(doc.category, 0) + 1
        n_cites = len(doc.cited_ids)
        citation_hist[n_cites] = citation_hist.get(n_cites, 0) + 1
    return {
        "documents": len(store),
        "by_year": {str(y): by_year[y] for y in sorted(by_year)},
        "by_category": {c: by_category[c] for c in sorted(by_category)},
        "tokens_mean": float(np.mean(token_counts)) if token_counts else 0.0,
        "tokens_std": float(np.std(token_counts)) if token_counts else 0.0,
        "citation_histogram": {str(n): citation_hist[n] for n in sorted(citation_hist)},
    }


# ---------------------------------------------------------------------------
# featurized on-disk stores and search
# ---------------------------------------------------------------------------

def featurize_to_dir(store: CorpusStore, config: RunConfig, out_dir: str) -> None:
    """Persist feature vectors and the models needed to featurize queries."""
    os.makedirs(out_dir, exist_ok=True)
    featurized = compute_features(store, config)
    files = {"features": "features.tsv"}
    order = store.ids()
    FeatureMatrix(
        rows=[featurized.vectors[i] for i in order],
        dim=next(iter(featurized.vectors.values())).dim if featurized.vectors else 0,
    ).save(os.path.join(out_dir, "features.tsv"))

    if featurized.bow_vocab is not None:
        files["bow_vocab"] = "bow_vocab.tsv"
        featurized.bow_vocab.save(os.path.join(out_dir, "bow_vocab.tsv"))
    if featurized.method == "kpca":
        files["bow_features"] = "bow_features.tsv"
        featurized.bow_matrix.save(os.path.join(out_dir, "bow_features.tsv"))
        files["model"] = "model.kpca"
        featurized.kpca.save(os.path.join(out_dir, "model.kpca"), train_matrix_ref="bow_features.tsv")
    elif featurized.method == "lsa":
        files["model"] = "model.lsa"
        featurized.lsa.save(os.path.join(out_dir, "model.lsa"))
    elif featurized.method == "bow_word2vec":
        files["emb_vocab"] = "emb_vocab.tsv"
        featurized.word2vec.vocab_.save(os.path.join(out_dir, "emb_vocab.tsv"))
        files["model"] = "model.w2v"
        featurized.word2vec.save(os.path.join(out_dir, "model.w2v"), vocab_ref="emb_vocab.tsv")
    elif featurized.method == "doc2vec":
        files["emb_vocab"] = "emb_vocab.tsv"
        featurized.doc2vec.vocab_.save(os.path.join(out_dir, "emb_vocab.tsv"))
        files["model"] = "model.d2v"
        featurized.doc2vec.save(os.path.join(out_dir, "model.d2v"), vocab_ref="emb_vocab.tsv")

    manifest = {
        "feature_method": config.feature_method,
        "section": config.section,
        "bow": dataclasses.asdict(config.bow),
        "bow_min_count": config.bow_min_count,
        "n_components": config.n_components,
        "seed": config.seed,
        "corpus_digest": corpus_digest(store),
        "files": files,
    }
    with open(os.path.join(out_dir, _MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_featurized(index_dir: str) -> Featurized:
    """Rehydrate a featurized directory written by :func:`featurize_to_dir`."""
    manifest_path = os.path.join(index_dir, _MANIFEST)
    if not os.path.exists(manifest_path):
        raise ValidationError(
            f"{index_dir!r} is not a featurized corpus (missing {_MANIFEST}); "
            "run the featurize or evaluate command first"
        )
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    files = manifest["files"]

    def fpath(name):
        return os.path.join(index_dir, files[name])

    matrix = FeatureMatrix.load(fpath("features"))
    result = Featurized(
        method=manifest["feature_method"],
        section=manifest["section"],
        vectors=matrix.feature_map(),
        infer_seed=manifest.get("seed", 0),
    )
    if "bow_vocab" in files:
        result.bow_vocab = Vocabulary.load(fpath("bow_vocab"))
        result.bow_config = BowConfig(**manifest["bow"])
    if result.method == "lsa":
        result.lsa = Lsa.load(fpath("model"))
    elif result.method == "kpca":
        result.bow_matrix = FeatureMatrix.load(fpath("bow_features"))
        result.kpca, _ = KernelPca.load(fpath("model"), train_matrix=result.bow_matrix)
    elif result.method == "bow_word2vec":
        result.word2vec = Word2Vec.load(fpath("model"))
    elif result.method == "doc2vec":
        result.doc2vec = Doc2Vec.load(fpath("model"))
    return result


def load_query_document(path) -> PatentDocument:
    """Read a query document from a JSON object file (or first JSONL line)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read().strip()
    if not text:
        raise ValidationError(f"{path}: empty query document")
    first_line = text.splitlines()[0]
    try:
        record = json.loads(text)
    except json.JSONDecodeError:
        try:
            record = json.loads(first_line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed query JSON ({exc.msg})") from exc
    doc = PatentDocument(
        id=str(record.get("id", "query")),
        title=str(record.get("title", "")),
        abstract=str(record.get("abstract", "")),
        claims=str(record.get("claims", "")),
        description=str(record.get("description", "")),
        pub_year=int(record.get("pub_year", 9999)),
        category=str(record.get("category", "")),
        cited_ids=[str(c) for c in record.get("cited_ids", [])],
    )
    doc.validate()
    return doc


def cmd_search(
    featurized: Featurized, query: PatentDocument, k: int,
    threshold: float = float("-inf"), measure: MeasureSpec | None = None,
) -> list[tuple[str, float]]:
    """Rank corpus documents against a query document by linear scan.

    Returns up to ``k`` (doc_id, score) entries with score >= threshold,
    sorted by descending score then ascending id; the query's own id is
    never returned.
    """
    if not query.section_text(featurized.section).strip():
        raise ValidationError(f"query document {query.id!r} has no text in section {featurized.section!r}")
    if k <= 0:
        return []
    from .measures import similarity

    spec = measure if measure is not None else parse_measure("coefficient:cosine")
    query_vec = featurized.featurize_query(query)
    hits = []
    for doc_id, vec in featurized.vectors.items():
        if doc_id == query.id:
            continue
        score = similarity(spec, query_vec, vec)
        if score >= threshold:
            hits.append((doc_id, score))
    hits.sort(key=lambda item: (-item[1], item[0]))
    return hits[:k]
