"""Embedding containers and the pooling / similarity primitives.

Each image contributes a token matrix per pipeline stage ("vision" for
encoder outputs, "final" for last-hidden-state activations). Token
matrices are reduced to single unit vectors by mean or max pooling over
the token axis followed by L2 normalization; sets of unit vectors are
summarized by renormalized centroids. All arithmetic runs in float64
regardless of the float32 wire format.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DimMismatch,
    DuplicateId,
    EmptySet,
    MissingEmbedding,
    NonFiniteInput,
    ValidationError,
    ZeroVector,
)

Stage = Literal["vision", "final"]
Pooling = Literal["mean", "max"]

STAGES = ("vision", "final")
POOLINGS = ("mean", "max")

#: Norms below this are treated as zero; normalization is refused.
NORM_EPS = 1e-12
#: Tolerance on the unit-norm invariant of pooled vectors.
UNIT_TOL = 1e-6


def _as_readonly_f64(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class EmbeddingRecord:
    """Token embeddings of one image at one pipeline stage.

    ``tokens`` has shape (num_tokens, dim) with num_tokens >= 1 and
    dim >= 1; entries must be finite.
    """

    image_id: str
    stage: str
    tokens: np.ndarray

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValidationError(f"unknown stage {self.stage!r}")
        tokens = _as_readonly_f64(self.tokens)
        if tokens.ndim != 2 or tokens.shape[0] < 1 or tokens.shape[1] < 1:
            raise DimensionMismatch(
                f"tokens must have shape (num_tokens >= 1, dim >= 1), "
                f"got {tokens.shape} for image {self.image_id!r}"
            )
        if not np.all(np.isfinite(tokens)):
            raise NonFiniteInput(f"non-finite token entries for image {self.image_id!r}")
        object.__setattr__(self, "tokens", tokens)

    @property
    def num_tokens(self) -> int:
        return self.tokens.shape[0]

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]


@dataclass(frozen=True)
class PooledVector:
    """L2-normalized pooled embedding of one image."""

    image_id: str
    stage: str
    v: np.ndarray

    def __post_init__(self):
        v = _as_readonly_f64(self.v)
        if v.ndim != 1 or v.size < 1:
            raise DimensionMismatch(f"pooled vector must be 1-d, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput(f"non-finite pooled vector for image {self.image_id!r}")
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise ValidationError(
                f"pooled vector for image {self.image_id!r} is not unit norm "
                f"(|v| = {np.linalg.norm(v):.9f})"
            )
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.v.size


def normalize(vec: np.ndarray, *, what: str = "vector") -> np.ndarray:
    """L2-normalize, refusing near-zero input (norm < 1e-12)."""
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm < NORM_EPS:
        raise ZeroVector(f"cannot normalize near-zero {what} (norm = {norm:.3e})")
    return vec / norm


def pool(record: EmbeddingRecord, method: Pooling = "mean") -> PooledVector:
    """Collapse a token matrix to one unit vector.

    ``mean`` takes the elementwise mean over the token axis, ``max`` the
    elementwise max; either way the result is L2-normalized.

    Raises:
        ZeroVector: the pooled vector has norm below 1e-12.
        NonFiniteInput: propagated from record construction.
    """
    if method == "mean":
        pooled = record.tokens.mean(axis=0)
    elif method == "max":
        pooled = record.tokens.max(axis=0)
    else:
        raise ValidationError(f"unknown pooling method {method!r}")
    v = normalize(pooled, what=f"pooled embedding of image {record.image_id!r}")
    return PooledVector(record.image_id, record.stage, v)


def cosine(a, b) -> float:
    """Cosine similarity a.b / (|a| |b|). Accepts PooledVector or array."""
    va = a.v if isinstance(a, PooledVector) else np.asarray(a, dtype=np.float64)
    vb = b.v if isinstance(b, PooledVector) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"cosine over mismatched shapes {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na < NORM_EPS or nb < NORM_EPS:
        raise ZeroVector("cosine similarity undefined for near-zero vector")
    return float(np.dot(va, vb) / (na * nb))


def centroid(vectors: Sequence) -> np.ndarray:
    """Renormalized mean of member vectors.

    Renormalizing never changes a nearest-centroid decision (cosine is
    scale invariant) but downstream losses require unit centroids, so the
    prototype is always returned with unit norm.

    Raises:
        EmptySet: no members.
        DimensionMismatch: members disagree on dimension.
        ZeroVector: members cancel (e.g. antipodal pair), mean is ~0.
    """
    members = [m.v if isinstance(m, PooledVector) else np.asarray(m, dtype=np.float64) for m in vectors]
    if not members:
        raise EmptySet("centroid of an empty member set")
    dims = {m.shape for m in members}
    if len(dims) != 1:
        raise DimensionMismatch(f"inconsistent member shapes: {sorted(dims)}")
    return normalize(np.mean(members, axis=0), what="centroid")


class EmbeddingStore:
    """Lookup of (stage, image_id) -> EmbeddingRecord for one dataset.

    Enforces unique image ids and a single dimension per stage. Frozen by
    convention once loading finishes; all reads are side-effect free.
    """

    def __init__(self, records: Iterable[EmbeddingRecord] = ()):
        self._by_stage: dict[str, dict[str, EmbeddingRecord]] = {}
        for record in records:
            self.add(record)

    def add(self, record: EmbeddingRecord) -> None:
        stage_map = self._by_stage.setdefault(record.stage, {})
        if record.image_id in stage_map:
            raise DuplicateId(f"duplicate {record.stage}-stage embedding for image {record.image_id!r}")
        if stage_map:
            dim = next(iter(stage_map.values())).dim
            if record.dim != dim:
                raise DimMismatch(
                    f"image {record.image_id!r} has dim {record.dim} but "
                    f"{record.stage} stage holds dim {dim}"
                )
        stage_map[record.image_id] = record

    def get(self, image_id: str, stage: str) -> EmbeddingRecord:
        try:
            return self._by_stage[stage][image_id]
        except KeyError:
            raise MissingEmbedding(f"no {stage}-stage embedding for image {image_id!r}") from None

    def has(self, image_id: str, stage: str) -> bool:
        return image_id in self._by_stage.get(stage, {})

    def stages(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_stage))

    def image_ids(self, stage: str) -> tuple[str, ...]:
        return tuple(sorted(self._by_stage.get(stage, {})))

    def dim(self, stage: str) -> int:
        stage_map = self._by_stage.get(stage)
        if not stage_map:
            raise MissingEmbedding(f"store holds no {stage}-stage embeddings")
        return next(iter(stage_map.values())).dim

    def __len__(self) -> int:
        return sum(len(m) for m in self._by_stage.values())
