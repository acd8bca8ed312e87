"""Synthetic task datasets with a controllable separability dial and an
independent brute-force classification oracle.

Every draw comes from a counter-based Philox4x64 stream so fixtures are
reproducible from the documented algorithm alone:

* stream key: (seed, substream) as two uint64 words; substream i in
  [0, num_samples) belongs to sample i, substream 2**64 - 1 is the
  dataset-global stream (final-stage transform parameters);
* uniforms are the bit generator's 64-bit outputs mapped to doubles as
  (x >> 11) * 2**-53, consumed in C order when drawn as arrays;
* standard normals come from Box-Muller pairs: for uniforms (u1, u2),
  radius = sqrt(-2 ln(1 - u1)), angle = 2 pi u2, yielding
  (radius cos angle, radius sin angle); odd counts discard the last sine.

Per-sample draw order: one block of 2 * dim normals (class axis, then
the tangent axis before Gram-Schmidt against the class axis), one block
of (2k + 1) * tokens_per_image * dim normals (token noise for positives
0..k-1, negatives 0..k-1, then the query, each row-major), then the
simulated generative draw (one uniform; one more when disagreeing
without flip_to_inverse).

Geometry: the two class directions are unit vectors placed
``separation * SIGMA`` apart (chord distance); tokens are the class
direction plus SIGMA-scaled isotropic Gaussian noise, so ``separation``
reads as mean distance in within-class standard deviations. Stored token
values are rounded through float32 once, matching the wire format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .embeddings import EmbeddingRecord, EmbeddingStore
from .errors import InvalidConfig, ValidationError
from .probe import BongardSample
from .stats import PredictionSet

#: Within-class standard deviation of token noise (per coordinate).
SIGMA = 0.15

#: Substream index of the dataset-global stream.
GLOBAL_STREAM = 2**64 - 1

FinalTransform = Literal["identity", "rotation", "collapse"]
FINAL_TRANSFORMS = ("identity", "rotation", "collapse")


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one synthetic dataset.

    ``gen_agreement`` is the probability that the simulated generative
    prediction copies the vision-stage probe's prediction; disagreements
    are uniform coin flips, or the exact opposite when
    ``flip_to_inverse`` is set (producing inverse dependence).
    ``final_transform`` controls how final-stage tokens derive from
    vision-stage ones: reused as-is, passed through a global orthogonal
    map (cosine-preserving), or projected off the class-separating
    direction (destroying linear separability, chance-level probe).
    """

    seed: int
    dim: int
    num_samples: int
    k: int = 6
    separation: float = 2.0
    gen_agreement: float = 0.9
    flip_to_inverse: bool = False
    final_transform: FinalTransform = "rotation"
    tokens_per_image: int = 4

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidConfig(f"dim must be >= 2, got {self.dim}")
        if self.num_samples < 1:
            raise InvalidConfig(f"num_samples must be >= 1, got {self.num_samples}")
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.separation <= 2.0 / SIGMA:
            raise InvalidConfig(
                f"separation must lie in [0, {2.0 / SIGMA:.4f}] "
                f"(unit directions cannot sit further apart), got {self.separation}"
            )
        if not 0.0 <= self.gen_agreement <= 1.0:
            raise InvalidConfig(f"gen_agreement must lie in [0, 1], got {self.gen_agreement}")
        if self.final_transform not in FINAL_TRANSFORMS:
            raise InvalidConfig(f"unknown final_transform {self.final_transform!r}")
        if self.tokens_per_image < 1:
            raise InvalidConfig(f"tokens_per_image must be >= 1, got {self.tokens_per_image}")


@dataclass(frozen=True)
class SynthDataset:
    """Generated records, samples, and simulated generative predictions."""

    config: SynthConfig
    store: EmbeddingStore
    samples: tuple[BongardSample, ...]
    gen_predictions: PredictionSet
    bayes_accuracy: float


def _stream(seed: int, substream: int) -> np.random.Generator:
    key = np.array([seed & (2**64 - 1), substream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _gaussians(gen: np.random.Generator, count: int) -> np.ndarray:
    pairs = (count + 1) // 2
    u = gen.random((pairs, 2))
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = np.empty(pairs * 2)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count]


def _unit(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec)


def _class_directions(gen: np.random.Generator, dim: int, separation: float):
    block = _gaussians(gen, 2 * dim)
    axis = _unit(block[:dim])
    tangent_raw = block[dim:]
    tangent = tangent_raw - np.dot(axis, tangent_raw) * axis
    norm = np.linalg.norm(tangent)
    if norm < 1e-9:
        raise ValidationError("degenerate tangent draw")  # measure zero
    tangent /= norm
    half_chord = separation * SIGMA / 2.0
    cos_a = math.sqrt(1.0 - half_chord**2)
    mu_pos = cos_a * axis + half_chord * tangent
    mu_neg = cos_a * axis - half_chord * tangent
    return mu_pos, mu_neg


def _round32(tokens: np.ndarray) -> np.ndarray:
    return tokens.astype(np.float32).astype(np.float64)


def _householder_pair(gen: np.random.Generator, dim: int):
    w1 = _unit(_gaussians(gen, dim))
    w2 = _unit(_gaussians(gen, dim))
    return w1, w2


def _apply_rotation(tokens: np.ndarray, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    # Two Householder reflections compose to a rotation; applied per token.
    out = tokens - 2.0 * np.outer(tokens @ w1, w1)
    return out - 2.0 * np.outer(out @ w2, w2)


def _collapse(tokens: np.ndarray, direction: np.ndarray) -> np.ndarray:
    return tokens - np.outer(tokens @ direction, direction)


def generate(config: SynthConfig) -> SynthDataset:
    """Generate a dataset: balanced truth labels (even sample index ->
    positive query), both stages populated, simulated generative
    predictions tied to the vision-stage probe by ``gen_agreement``."""
    records: list[EmbeddingRecord] = []
    samples: list[BongardSample] = []
    gen_preds: dict[str, str] = {}

    rotation = None
    if config.final_transform == "rotation":
        rotation = _householder_pair(_stream(config.seed, GLOBAL_STREAM), config.dim)

    t = config.tokens_per_image
    for index in range(config.num_samples):
        gen = _stream(config.seed, index)
        mu_pos, mu_neg = _class_directions(gen, config.dim, config.separation)
        sample_id = f"s{index:05d}"
        truth = "positive" if index % 2 == 0 else "negative"

        pos_ids = tuple(f"{sample_id}-p{j}" for j in range(config.k))
        neg_ids = tuple(f"{sample_id}-n{j}" for j in range(config.k))
        query_id = f"{sample_id}-q"
        image_ids = (*pos_ids, *neg_ids, query_id)
        means = (
            *([mu_pos] * config.k),
            *([mu_neg] * config.k),
            mu_pos if truth == "positive" else mu_neg,
        )
        noise = _gaussians(gen, len(image_ids) * t * config.dim).reshape(
            len(image_ids), t, config.dim
        )
        image_tokens = {
            image_id: _round32(mu + SIGMA * noise[i])
            for i, (image_id, mu) in enumerate(zip(image_ids, means))
        }

        if config.separation > 0:
            collapse_dir = _unit(mu_pos - mu_neg)
        else:
            collapse_dir = None

        for image_id, vision_tokens in image_tokens.items():
            records.append(EmbeddingRecord(image_id, "vision", vision_tokens))
            if config.final_transform == "identity":
                final_tokens = vision_tokens
            elif config.final_transform == "rotation":
                final_tokens = _round32(_apply_rotation(vision_tokens, *rotation))
            else:
                if collapse_dir is None:
                    final_tokens = vision_tokens
                else:
                    final_tokens = _round32(_collapse(vision_tokens, collapse_dir))
            records.append(EmbeddingRecord(image_id, "final", final_tokens))

        sample = BongardSample(sample_id, pos_ids, neg_ids, query_id, truth)
        samples.append(sample)

        probe_pred = _naive_classify(
            [image_tokens[i] for i in pos_ids],
            [image_tokens[i] for i in neg_ids],
            image_tokens[query_id],
        )
        if gen.random() < config.gen_agreement:
            gen_preds[sample_id] = probe_pred
        elif config.flip_to_inverse:
            gen_preds[sample_id] = "negative" if probe_pred == "positive" else "positive"
        else:
            gen_preds[sample_id] = "positive" if gen.random() < 0.5 else "negative"

    store = EmbeddingStore(records)
    return SynthDataset(
        config=config,
        store=store,
        samples=tuple(samples),
        gen_predictions=PredictionSet("gen", gen_preds),
        bayes_accuracy=_bayes_accuracy(config),
    )


def _bayes_accuracy(config: SynthConfig) -> float:
    # Asymptotic nearest-centroid accuracy for the generative geometry,
    # ignoring sphere curvature and centroid noise: Phi(sep * sqrt(T) / 2).
    x = config.separation * math.sqrt(config.tokens_per_image) / 2.0
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


# --- brute-force oracle --------------------------------------------------
#
# Deliberately naive pure-Python reimplementation of mean pooling,
# normalization, centroids, and cosine classification. Shares no code
# with the probe path; used as its arbiter.


def _naive_pool(tokens) -> list[float]:
    rows = [list(map(float, row)) for row in tokens]
    dim = len(rows[0])
    pooled = [0.0] * dim
    for row in rows:
        for j in range(dim):
            pooled[j] += row[j]
    pooled = [x / len(rows) for x in pooled]
    norm = math.sqrt(sum(x * x for x in pooled))
    return [x / norm for x in pooled]


def _naive_centroid(vectors: list[list[float]]) -> list[float]:
    dim = len(vectors[0])
    out = [0.0] * dim
    for vec in vectors:
        for j in range(dim):
            out[j] += vec[j]
    out = [x / len(vectors) for x in out]
    norm = math.sqrt(sum(x * x for x in out))
    return [x / norm for x in out]


def _naive_cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return dot / (na * nb)


def _naive_classify(pos_tokens, neg_tokens, query_tokens) -> str:
    query = _naive_pool(query_tokens)
    pos_centroid = _naive_centroid([_naive_pool(tm) for tm in pos_tokens])
    neg_centroid = _naive_centroid([_naive_pool(tm) for tm in neg_tokens])
    sim_pos = _naive_cosine(query, pos_centroid)
    sim_neg = _naive_cosine(query, neg_centroid)
    return "positive" if sim_pos >= sim_neg else "negative"


def oracle_predictions(dataset: SynthDataset, stage: str = "vision") -> dict[str, str]:
    """Brute-force nearest-centroid predictions, one per sample."""
    preds = {}
    for sample in dataset.samples:
        preds[sample.sample_id] = _naive_classify(
            [dataset.store.get(i, stage).tokens for i in sample.positives],
            [dataset.store.get(i, stage).tokens for i in sample.negatives],
            dataset.store.get(sample.query, stage).tokens,
        )
    return preds


def oracle_nearest_centroid(dataset: SynthDataset, stage: str = "vision") -> float:
    """Brute-force nearest-centroid accuracy (the probe's arbiter)."""
    preds = oracle_predictions(dataset, stage)
    hits = sum(1 for s in dataset.samples if preds[s.sample_id] == s.truth)
    return hits / len(dataset.samples)
