"""Non-parametric linear probes over pooled embeddings.

Two classification contexts:

* batched  -- nearest centroid: the query is compared against one
  prototype per example set (robust to outlier examples);
* single   -- nearest neighbor: the query takes the set membership of the
  single most similar example image (sensitive to outliers).

Ties (equal similarity to both sides) predict positive; the rule is
arbitrary but fixed so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

from .embeddings import EmbeddingStore, Pooling, Stage, centroid, cosine, pool
from .errors import EmptySet, ValidationError
from .stats import AccuracyEstimate, PredictionSet

Context = Literal["batched", "single"]
CONTEXTS = ("batched", "single")
TruthLabel = Literal["positive", "negative"]


@dataclass(frozen=True)
class BongardSample:
    """One task instance: k positive and k negative examples plus a query."""

    sample_id: str
    positives: tuple[str, ...]
    negatives: tuple[str, ...]
    query: str
    truth: TruthLabel
    split_tag: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "positives", tuple(self.positives))
        object.__setattr__(self, "negatives", tuple(self.negatives))
        if len(self.positives) < 1:
            raise ValidationError(f"sample {self.sample_id!r} needs at least one positive example")
        if len(self.positives) != len(self.negatives):
            raise ValidationError(
                f"sample {self.sample_id!r} has {len(self.positives)} positives "
                f"but {len(self.negatives)} negatives"
            )
        referenced = (*self.positives, *self.negatives, self.query)
        if len(set(referenced)) != len(referenced):
            raise ValidationError(f"sample {self.sample_id!r} references an image twice")
        if self.truth not in ("positive", "negative"):
            raise ValidationError(f"sample {self.sample_id!r} has unknown truth {self.truth!r}")

    @property
    def k(self) -> int:
        return len(self.positives)


@dataclass(frozen=True)
class ProbeResult:
    """Classification of one query with its per-set similarities."""

    sample_id: str
    predicted: TruthLabel
    sim_pos: float
    sim_neg: float
    stage: str
    context: str


def classify_batched(
    store: EmbeddingStore,
    sample: BongardSample,
    stage: Stage = "vision",
    pooling: Pooling = "mean",
) -> ProbeResult:
    """Nearest-centroid classification of the query image."""
    query = pool(store.get(sample.query, stage), pooling)
    pos_centroid = centroid([pool(store.get(i, stage), pooling) for i in sample.positives])
    neg_centroid = centroid([pool(store.get(i, stage), pooling) for i in sample.negatives])
    sim_pos = cosine(query, pos_centroid)
    sim_neg = cosine(query, neg_centroid)
    predicted = "positive" if sim_pos >= sim_neg else "negative"
    return ProbeResult(sample.sample_id, predicted, sim_pos, sim_neg, stage, "batched")


def classify_single(
    store: EmbeddingStore,
    sample: BongardSample,
    stage: Stage = "vision",
    pooling: Pooling = "mean",
) -> ProbeResult:
    """Nearest-neighbor classification of the query image.

    The prediction is the set membership of the most similar individual
    example; sim_pos/sim_neg report the best similarity within each set.
    """
    query = pool(store.get(sample.query, stage), pooling)
    sim_pos = max(cosine(query, pool(store.get(i, stage), pooling)) for i in sample.positives)
    sim_neg = max(cosine(query, pool(store.get(i, stage), pooling)) for i in sample.negatives)
    predicted = "positive" if sim_pos >= sim_neg else "negative"
    return ProbeResult(sample.sample_id, predicted, sim_pos, sim_neg, stage, "single")


def classify_all(
    store: EmbeddingStore,
    samples: Sequence[BongardSample],
    stage: Stage = "vision",
    context: Context = "batched",
    pooling: Pooling = "mean",
) -> list[ProbeResult]:
    """Classify every sample, in sample_id-sorted order for stable reports."""
    if context == "batched":
        classify = classify_batched
    elif context == "single":
        classify = classify_single
    else:
        raise ValidationError(f"unknown context {context!r}")
    ordered = sorted(samples, key=lambda s: s.sample_id)
    return [classify(store, s, stage, pooling) for s in ordered]


def prediction_set(results: Sequence[ProbeResult], label: str) -> PredictionSet:
    return PredictionSet(label, {r.sample_id: r.predicted for r in results})


def score_predictions(
    samples: Sequence[BongardSample],
    predictions: Mapping[str, str],
    label: str,
) -> tuple[AccuracyEstimate, int]:
    """Accuracy of per-sample predictions against ground truth.

    "invalid" predictions are excluded (n shrinks) and counted in the
    returned invalid tally. Per-class estimates cover the truth-positive
    and truth-negative subsets; an empty subset yields None on that side.
    """
    if not samples:
        raise EmptySet("no samples to score")
    hits = {"positive": 0, "negative": 0}
    totals = {"positive": 0, "negative": 0}
    invalid = 0
    for sample in samples:
        value = predictions.get(sample.sample_id)
        if value is None:
            raise ValidationError(f"{label!r} has no prediction for sample {sample.sample_id!r}")
        if value == "invalid":
            invalid += 1
            continue
        totals[sample.truth] += 1
        if value == sample.truth:
            hits[sample.truth] += 1
    n = totals["positive"] + totals["negative"]
    if n == 0:
        raise EmptySet(f"{label!r} has no valid predictions")

    def subset(side: str) -> AccuracyEstimate | None:
        if totals[side] == 0:
            return None
        return AccuracyEstimate(hits[side] / totals[side], totals[side], f"{label}[{side}]")

    estimate = AccuracyEstimate(
        (hits["positive"] + hits["negative"]) / n,
        n,
        label,
        per_class=(subset("positive"), subset("negative")),
    )
    return estimate, invalid


def probe_accuracy(
    store: EmbeddingStore,
    samples: Sequence[BongardSample],
    stage: Stage = "vision",
    context: Context = "batched",
    pooling: Pooling = "mean",
    label: str | None = None,
) -> AccuracyEstimate:
    """Probe accuracy over a sample list, with per-class splits.

    The vision-stage batched mean-pooled variant of this number is the
    linear separability ceiling.
    """
    if label is None:
        label = f"probe[{stage},{context},{pooling}]"
    results = classify_all(store, samples, stage, context, pooling)
    estimate, _ = score_predictions(samples, {r.sample_id: r.predicted for r in results}, label)
    return estimate
