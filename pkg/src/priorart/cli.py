"""Command-line interface.

Subcommands: ingest, stats, synth, pairs, featurize, train-w2v, train-d2v,
score, evaluate, search. Run configuration comes from `--config <json>`,
with individual flags overriding config values. Exit codes: 0 success,
2 validation error, 3 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import pipeline as pl
from .corpus import (
    build_cited_random_pairs,
    generate_synthetic_corpus,
    load_cited_random_pairs,
    load_corpus,
    load_relevance_pairs,
    save_corpus,
)
from .embeddings import Doc2Vec, Word2Vec
from .exceptions import NumericError, StageError, ValidationError
from .measures import load_scored_pairs, save_scored_pairs, score_pairs
from .metrics import evaluate_scored_pairs, score_histograms
from .preprocessing import tokenize_corpus


def _load_config(args) -> pl.RunConfig:
    if getattr(args, "config", None):
        config = pl.RunConfig.from_json_file(args.config)
    else:
        config = pl.RunConfig()
    overrides = {
        "corpus_path": getattr(args, "corpus", None),
        "section": getattr(args, "section", None),
        "feature_method": getattr(args, "feature_method", None),
        "n_components": getattr(args, "n_components", None),
        "measure": getattr(args, "measure", None),
        "seed": getattr(args, "seed", None),
        "output_dir": getattr(args, "output_dir", None),
        "cache_dir": getattr(args, "cache_dir", None),
    }
    data = dataclasses.asdict(config)
    data["bow"] = config.bow
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return pl.RunConfig(**data)


def _add_config_flags(parser, with_method=True):
    parser.add_argument("--config", help="JSON run configuration file")
    parser.add_argument("--corpus", help="corpus JSONL path (overrides config)")
    parser.add_argument("--section", help="document section selection")
    if with_method:
        parser.add_argument("--feature-method", dest="feature_method",
                            choices=pl.FEATURE_METHODS, help="feature representation")
        parser.add_argument("--n-components", dest="n_components", type=int,
                            help="LSA/KPCA dimensionality")
    parser.add_argument("--measure", help="similarity measure family:kind[:param=value,...]")
    parser.add_argument("--seed", type=int, help="run seed")
    parser.add_argument("--output-dir", dest="output_dir", help="artifact directory")
    parser.add_argument("--cache-dir", dest="cache_dir", help="model cache directory")


def cmd_ingest(args) -> int:
    store = load_corpus(args.corpus)
    if args.out:
        save_corpus(store, args.out)
    print(f"loaded {len(store)} documents from {args.corpus}")
    return 0


def cmd_stats(args) -> int:
    store = load_corpus(args.corpus)
    stats = pl.cmd_stats(store)
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    store, topic_of = generate_synthetic_corpus(
        n_topics=args.topics,
        docs_per_topic=args.docs_per_topic,
        vocab_per_topic=args.vocab_per_topic,
        noise_vocab=args.noise_vocab,
        seed=args.seed,
        duplicates_per_topic=args.duplicates_per_topic,
    )
    save_corpus(store, args.out)
    if args.topics_out:
        with open(args.topics_out, "w", encoding="utf-8") as fh:
            fh.write("doc_id,topic\n")
            for doc_id, topic in topic_of.items():
                fh.write(f"{doc_id},{topic}\n")
    print(f"wrote {len(store)} synthetic documents to {args.out}")
    return 0


def cmd_pairs(args) -> int:
    store = load_corpus(args.corpus)
    dataset = build_cited_random_pairs(store, args.target_year, args.n_random, args.seed)
    dataset.save(args.out)
    print(f"wrote {len(dataset)} pairs to {args.out}; counts: {dataset.counts}")
    return 0


def cmd_featurize(args) -> int:
    config = _load_config(args)
    store = load_corpus(config.corpus_path)
    pl.featurize_to_dir(store, config, args.index_dir)
    print(f"featurized {len(store)} documents ({config.feature_method}) into {args.index_dir}")
    return 0


def _embedding_flags(parser, defaults):
    parser.add_argument("--vector-size", type=int, default=defaults["vector_size"])
    parser.add_argument("--window", type=int, default=defaults["window"])
    parser.add_argument("--negative", type=int, default=defaults["negative"])
    parser.add_argument("--min-count", type=int, default=defaults["min_count"])
    parser.add_argument("--epochs", type=int, default=defaults["epochs"])
    parser.add_argument("--alpha", type=float, default=defaults["alpha"])
    parser.add_argument("--min-alpha", type=float, default=defaults["min_alpha"])
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1)


def cmd_train_w2v(args) -> int:
    store = load_corpus(args.corpus)
    docs = tokenize_corpus(store, args.section or "fulltext")
    model = Word2Vec(
        vector_size=args.vector_size, window=args.window, negative=args.negative,
        min_count=args.min_count, epochs=args.epochs, alpha=args.alpha,
        min_alpha=args.min_alpha, subsample=args.subsample, workers=args.workers,
        seed=args.seed,
    ).fit(docs)
    model.vocab_.save(args.out + ".vocab")
    model.save(args.out, vocab_ref=args.out.rsplit("/", 1)[-1] + ".vocab")
    print(f"trained word2vec on {len(docs)} documents; vocabulary {len(model.vocab_)}")
    return 0


def cmd_train_d2v(args) -> int:
    store = load_corpus(args.corpus)
    docs = tokenize_corpus(store, args.section or "fulltext")
    exclude = args.exclude.split(",") if args.exclude else []
    model = Doc2Vec(
        vector_size=args.vector_size, window=args.window, negative=args.negative,
        min_count=args.min_count, epochs=args.epochs, alpha=args.alpha,
        min_alpha=args.min_alpha, workers=args.workers, seed=args.seed,
    ).fit(docs, exclude_ids=exclude)
    model.vocab_.save(args.out + ".vocab")
    model.save(args.out, vocab_ref=args.out.rsplit("/", 1)[-1] + ".vocab")
    print(f"trained doc2vec on {len(model.doc_ids_)} documents; vocabulary {len(model.vocab_)}")
    return 0


def _load_pairs(path, store=None, threshold=2):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
    if "score" in header:
        return load_relevance_pairs(path, threshold=threshold, store=store)
    return load_cited_random_pairs(path, store=store)


def cmd_score(args) -> int:
    config = _load_config(args)
    featurized = pl.load_featurized(args.index_dir)
    pairs = _load_pairs(args.pairs, threshold=config.relevance_threshold)
    scored = score_pairs(pairs, featurized.vectors, config.measure_spec(),
                         config.relevance_threshold)
    save_scored_pairs(scored, args.out)
    print(f"scored {len(scored)} pairs with {config.measure} into {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    if args.scores:
        scored = load_scored_pairs(args.scores)
        positive = args.positive_label
        negative = args.negative_label
        report = evaluate_scored_pairs(scored, positive, negative,
                                       measure=config.measure, dataset_kind="scored")
        import os

        os.makedirs(config.output_dir, exist_ok=True)
        report.save(os.path.join(config.output_dir, "report.json"))
        report.save_roc(os.path.join(config.output_dir, "roc.csv"))
        score_histograms(scored, config.bins).save(os.path.join(config.output_dir, "histogram.csv"))
    else:
        if not args.pairs:
            raise ValidationError("evaluate needs either --scores or --pairs")
        store = load_corpus(config.corpus_path)
        pairs = _load_pairs(args.pairs, store=store, threshold=config.relevance_threshold)
        report = pl.cmd_pipeline(config, pairs, store=store)
    print(report.dumps(), end="")
    return 0


def cmd_search(args) -> int:
    config = _load_config(args)
    featurized = pl.load_featurized(args.index_dir)
    query = pl.load_query_document(args.query)
    hits = pl.cmd_search(featurized, query, k=args.k, threshold=args.threshold,
                         measure=config.measure_spec())
    for doc_id, score in hits:
        print(f"{score:.9g}\t{doc_id}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorart",
        description="Full-text similarity search and evaluation for patent prior art.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus JSONL file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="write a normalized copy here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus summary statistics")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic topic-clustered corpus")
    p.add_argument("--topics", type=int, default=4)
    p.add_argument("--docs-per-topic", type=int, default=20)
    p.add_argument("--vocab-per-topic", type=int, default=100)
    p.add_argument("--noise-vocab", type=int, default=50)
    p.add_argument("--duplicates-per-topic", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--topics-out", help="ground-truth topic CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pairs", help="build the cited/random pair dataset")
    p.add_argument("--corpus", required=True)
    p.add_argument("--target-year", type=int, required=True)
    p.add_argument("--n-random", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("featurize", help="featurize a corpus into an index directory")
    _add_config_flags(p)
    p.add_argument("--index-dir", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train-w2v", help="train skip-gram word embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--section", default="fulltext")
    _embedding_flags(p, {"vector_size": 200, "window": 5, "negative": 13,
                         "min_count": 5, "epochs": 5, "alpha": 0.025, "min_alpha": 1e-4})
    p.add_argument("--subsample", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_w2v)

    p = sub.add_parser("train-d2v", help="train PV-DM document embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--section", default="fulltext")
    _embedding_flags(p, {"vector_size": 50, "window": 8, "negative": 13,
                         "min_count": 5, "epochs": 18, "alpha": 0.025, "min_alpha": 1e-4})
    p.add_argument("--exclude", help="comma-separated doc ids to withhold from training")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_d2v)

    p = sub.add_parser("score", help="score a pair CSV against a featurized index")
    _add_config_flags(p)
    p.add_argument("--index-dir", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="full pipeline (--pairs) or metrics over --scores")
    _add_config_flags(p)
    p.add_argument("--pairs", help="pair CSV; triggers the full pipeline")
    p.add_argument("--scores", help="scored-pair CSV; metrics only")
    p.add_argument("--positive-label", default="cited")
    p.add_argument("--negative-label", default="random")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("search", help="rank corpus documents against a query document")
    _add_config_flags(p)
    p.add_argument("--index-dir", required=True)
    p.add_argument("--query", required=True, help="query document JSON file")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--threshold", type=float, default=float("-inf"))
    p.set_defaults(func=cmd_search)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, ValidationError) else 3
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
