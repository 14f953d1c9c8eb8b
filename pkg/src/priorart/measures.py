"""Similarity catalogue: coefficients over overlap counts, kernels, distances.

All measures are symmetric pure functions over sparse feature vectors.
Distances double as similarities through negation, so every measure ranks
"more similar" higher. Conventions: a similarity coefficient with a zero
denominator (one or both vectors zero) is 0, and distance terms with a
zero denominator contribute 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import PairDataset
from .exceptions import DomainError, NumericError, ParameterError, ValidationError
from .features import FeatureVector

COEFFICIENT_KINDS = (
    "cosine", "braun_blanquet", "dice", "jaccard",
    "kulczynski", "ochiai", "simpson", "sokal_sneath",
)
KERNEL_KINDS = ("linear", "gaussian", "histogram_intersection", "polynomial", "sigmoidal")
DISTANCE_KINDS = (
    "canberra", "chebyshev", "euclidean", "geodesic", "hellinger_sq",
    "jensen_shannon", "manhattan", "minkowski", "chi_sq",
)

_DEFAULT_PARAMS = {
    ("kernel", "gaussian"): {"sigma": 1.0},
    ("kernel", "polynomial"): {"p": 2.0, "theta": 1.0},
    ("kernel", "sigmoidal"): {"theta": 1.0},
    ("distance", "minkowski"): {"p": 3.0},
}


@dataclass(frozen=True)
class OverlapCounts:
    """Shared and exclusive component masses of two non-negative vectors."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class MeasureSpec:
    """One entry of the measure catalogue, with its parameters."""

    family: str
    kind: str
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kinds = {"coefficient": COEFFICIENT_KINDS, "kernel": KERNEL_KINDS, "distance": DISTANCE_KINDS}
        if self.family not in kinds:
            raise ParameterError(f"unknown measure family {self.family!r}")
        if self.kind not in kinds[self.family]:
            raise ParameterError(f"unknown {self.family} kind {self.kind!r}")
        merged = dict(_DEFAULT_PARAMS.get((self.family, self.kind), {}))
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        if self.params.get("sigma", 1.0) <= 0:
            raise ParameterError("sigma must be > 0")
        if self.params.get("p", 1.0) < 1:
            raise ParameterError("p must be >= 1")

    def __str__(self) -> str:
        text = f"{self.family}:{self.kind}"
        if self.params:
            text += ":" + ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return text


def parse_measure(text: str) -> MeasureSpec:
    """Parse `family:kind[:param=value,...]` into a MeasureSpec."""
    parts = text.strip().split(":")
    if len(parts) < 2 or len(parts) > 3:
        raise ParameterError(f"cannot parse measure {text!r}; expected family:kind[:params]")
    params = {}
    if len(parts) == 3:
        for item in parts[2].split(","):
            key, _, value = item.partition("=")
            if not _:
                raise ParameterError(f"malformed measure parameter {item!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ParameterError(f"non-numeric measure parameter {item!r}") from None
    return MeasureSpec(family=parts[0].strip(), kind=parts[1].strip(), params=params)


# ---------------------------------------------------------------------------
# vector iteration helpers
# ---------------------------------------------------------------------------

def _check_pair(x: FeatureVector, y: FeatureVector) -> None:
    if x.dim != y.dim:
        raise DomainError(f"dimension mismatch: {x.dim} vs {y.dim}")


def _check_non_negative(*vecs: FeatureVector) -> None:
    for v in vecs:
        if any(w < 0 for w in v.entries.values()):
            raise DomainError(f"vector {v.doc_id!r} has negative components")


def _union(x: FeatureVector, y: FeatureVector):
    for i in x.entries.keys() | y.entries.keys():
        yield x.entries.get(i, 0.0), y.entries.get(i, 0.0)


def _dot(x: FeatureVector, y: FeatureVector) -> float:
    small, large = (x.entries, y.entries) if len(x.entries) <= len(y.entries) else (y.entries, x.entries)
    return sum(v * large[i] for i, v in small.items() if i in large)


def _mass(x: FeatureVector) -> float:
    return sum(x.entries.values())


def _finite(value: float) -> float:
    if not math.isfinite(value):
        raise NumericError(f"measure produced non-finite value {value!r}")
    return value


# ---------------------------------------------------------------------------
# similarity coefficients
# ---------------------------------------------------------------------------

def overlap_counts(x: FeatureVector, y: FeatureVector) -> OverlapCounts:
    """Shared mass a plus the exclusive masses b and c of two vectors."""
    _check_pair(x, y)
    _check_non_negative(x, y)
    a = sum(min(v, y.entries[i]) for i, v in x.entries.items() if i in y.entries)
    return OverlapCounts(a=a, b=_mass(x) - a, c=_mass(y) - a)


def cosine(x: FeatureVector, y: FeatureVector) -> float:
    _check_pair(x, y)
    nx, ny = x.norm(), y.norm()
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return _finite(_dot(x, y) / (nx * ny))


def coefficient(kind: str, x: FeatureVector, y: FeatureVector) -> float:
    """Evaluate one similarity coefficient; zero denominators yield 0."""
    if kind == "cosine":
        return cosine(x, y)
    if kind not in COEFFICIENT_KINDS:
        raise ParameterError(f"unknown coefficient kind {kind!r}")
    o = overlap_counts(x, y)
    a, b, c = o.a, o.b, o.c
    if kind == "braun_blanquet":
        d = max(a + b, a + c)
        return _finite(a / d) if d else 0.0
    if kind == "dice":
        d = 2 * a + b + c
        return _finite(2 * a / d) if d else 0.0
    if kind == "jaccard":
        d = a + b + c
        return _finite(a / d) if d else 0.0
    if kind == "kulczynski":
        if (a + b) == 0.0 or (a + c) == 0.0:
            return 0.0
        return _finite(a / (2 * (a + b)) + a / (2 * (a + c)))
    if kind == "ochiai":
        d = math.sqrt((a + b) * (a + c))
        return _finite(a / d) if d else 0.0
    if kind == "simpson":
        d = min(a + b, a + c)
        return _finite(a / d) if d else 0.0
    # sokal_sneath
    d = a + 2 * (b + c)
    return _finite(a / d) if d else 0.0


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def kernel(kind: str, x: FeatureVector, y: FeatureVector, **params) -> float:
    _check_pair(x, y)
    if kind == "linear":
        return _finite(_dot(x, y))
    if kind == "gaussian":
        sigma = params.get("sigma", 1.0)
        if sigma <= 0:
            raise ParameterError("sigma must be > 0")
        return _finite(math.exp(-distance("euclidean", x, y) / (2 * sigma * sigma)))
    if kind == "histogram_intersection":
        _check_non_negative(x, y)
        return _finite(sum(min(v, y.entries[i]) for i, v in x.entries.items() if i in y.entries))
    if kind == "polynomial":
        p = params.get("p", 2.0)
        if p < 1:
            raise ParameterError("p must be >= 1")
        return _finite((_dot(x, y) + params.get("theta", 1.0)) ** p)
    if kind == "sigmoidal":
        return _finite(math.tanh(_dot(x, y) + params.get("theta", 1.0)))
    raise ParameterError(f"unknown kernel kind {kind!r}")


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def distance(kind: str, x: FeatureVector, y: FeatureVector, **params) -> float:
    _check_pair(x, y)
    if kind == "manhattan":
        return _finite(sum(abs(xi - yi) for xi, yi in _union(x, y)))
    if kind == "chebyshev":
        return _finite(max((abs(xi - yi) for xi, yi in _union(x, y)), default=0.0))
    if kind == "euclidean":
        # squared form, matching the catalogue
        return _finite(sum((xi - yi) ** 2 for xi, yi in _union(x, y)))
    if kind == "minkowski":
        p = params.get("p", 3.0)
        if p < 1:
            raise ParameterError("p must be >= 1")
        return _finite(sum(abs(xi - yi) ** p for xi, yi in _union(x, y)))
    if kind == "canberra":
        _check_non_negative(x, y)
        return _finite(sum(abs(xi - yi) / (xi + yi) for xi, yi in _union(x, y) if xi + yi > 0))
    if kind == "chi_sq":
        _check_non_negative(x, y)
        return _finite(sum((xi - yi) ** 2 / (xi + yi) for xi, yi in _union(x, y) if xi + yi > 0))
    if kind == "hellinger_sq":
        _check_non_negative(x, y)
        return _finite(sum((math.sqrt(xi) - math.sqrt(yi)) ** 2 for xi, yi in _union(x, y)))
    if kind == "jensen_shannon":
        _check_non_negative(x, y)
        total = 0.0
        for xi, yi in _union(x, y):
            m = (xi + yi) / 2
            if xi > 0:
                total += xi * math.log(xi / m)
            if yi > 0:
                total += yi * math.log(yi / m)
        return _finite(total)
    if kind == "geodesic":
        for v in (x, y):
            norm = v.norm()
            if norm != 0.0 and abs(norm - 1.0) > 1e-6:
                raise DomainError(
                    f"geodesic distance needs length-normalized vectors; {v.doc_id!r} has norm {norm:.6g}"
                )
        return _finite(math.acos(min(1.0, max(-1.0, _dot(x, y)))))
    raise ParameterError(f"unknown distance kind {kind!r}")


def distance_as_similarity(kind: str, x: FeatureVector, y: FeatureVector, **params) -> float:
    """Negated distance, so larger means more similar."""
    return -distance(kind, x, y, **params)


def similarity(spec: MeasureSpec, x: FeatureVector, y: FeatureVector) -> float:
    """Score one pair under the given measure; distances are negated."""
    if spec.family == "coefficient":
        return coefficient(spec.kind, x, y)
    if spec.family == "kernel":
        return kernel(spec.kind, x, y, **spec.params)
    return distance_as_similarity(spec.kind, x, y, **spec.params)


# ---------------------------------------------------------------------------
# pair scoring
# ---------------------------------------------------------------------------

@dataclass
class ScoredPair:
    target_id: str
    other_id: str
    label: str | None
    score: float


def score_pairs(
    pairs: PairDataset,
    features: dict[str, FeatureVector],
    spec: MeasureSpec,
    relevance_threshold: int = 2,
) -> list[ScoredPair]:
    """Attach a similarity score to every pair, preserving input order.

    Relevance datasets are binarized on the fly: label = relevant iff
    score > ``relevance_threshold``.
    """
    missing = sorted(
        {i for p in pairs.pairs for i in (p.target_id, p.other_id) if i not in features}
    )
    if missing:
        raise ValidationError(f"no feature vector for document id(s): {missing}")
    labels: list[str | None]
    if pairs.kind == "relevance":
        labels = pairs.binary_labels(relevance_threshold)
    else:
        labels = [p.label for p in pairs.pairs]
    return [
        ScoredPair(p.target_id, p.other_id, label, similarity(spec, features[p.target_id], features[p.other_id]))
        for p, label in zip(pairs.pairs, labels)
    ]


def save_scored_pairs(scored: list[ScoredPair], path) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target_id", "other_id", "label", "score"])
        for p in scored:
            writer.writerow([p.target_id, p.other_id, p.label or "", f"{p.score:.9g}"])


def load_scored_pairs(path) -> list[ScoredPair]:
    import csv

    scored = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = ("target_id", "other_id", "label", "score")
        missing = [n for n in required if n not in (reader.fieldnames or ())]
        if missing:
            raise ValidationError(f"{path}: missing CSV column(s) {missing}")
        for row in reader:
            scored.append(
                ScoredPair(row["target_id"], row["other_id"], row["label"] or None, float(row["score"]))
            )
    return scored
