"""Full-text document similarity for patent prior-art search.

The package turns a patent corpus into feature vectors (sparse tf-idf
bag-of-words, LSA, linear-kernel KPCA, tf-idf-weighted word2vec sums, or
PV-DM doc2vec), scores document pairs with a catalogue of similarity
measures, and evaluates rankings against citation or relevance labels.
"""

from .corpus import (
    CorpusStore,
    LabeledPair,
    PairDataset,
    PatentDocument,
    build_cited_random_pairs,
    generate_synthetic_corpus,
    load_corpus,
    load_relevance_pairs,
)
from .decomposition import KernelPca, Lsa
from .embeddings import Doc2Vec, Word2Vec, compose_doc_vector
from .features import BowConfig, BowVectorizer, FeatureMatrix, FeatureVector
from .measures import MeasureSpec, ScoredPair, parse_measure, score_pairs, similarity
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    auc,
    average_precision,
    confusion_metrics,
    roc_curve,
    score_histograms,
    spearman_rho,
)
from .pipeline import RunConfig, cmd_pipeline, cmd_search, cmd_stats, compute_features
from .preprocessing import TokenizedDoc, Vocabulary, build_vocabulary, preprocess, tokenize

__version__ = "0.1.0"

__all__ = [
    "BowConfig",
    "BowVectorizer",
    "ConfusionMatrix",
    "CorpusStore",
    "Doc2Vec",
    "EvalReport",
    "FeatureMatrix",
    "FeatureVector",
    "KernelPca",
    "LabeledPair",
    "Lsa",
    "MeasureSpec",
    "PairDataset",
    "PatentDocument",
    "RunConfig",
    "ScoredPair",
    "TokenizedDoc",
    "Vocabulary",
    "Word2Vec",
    "auc",
    "average_precision",
    "build_cited_random_pairs",
    "build_vocabulary",
    "cmd_pipeline",
    "cmd_search",
    "cmd_stats",
    "compose_doc_vector",
    "compute_features",
    "confusion_metrics",
    "generate_synthetic_corpus",
    "load_corpus",
    "load_relevance_pairs",
    "parse_measure",
    "preprocess",
    "roc_curve",
    "score_histograms",
    "score_pairs",
    "similarity",
    "spearman_rho",
    "tokenize",
]
