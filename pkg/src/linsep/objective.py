"""Training-objective mathematics: centroid-contrastive cross-entropy,
its closed-form gradients, the weighted combination with an externally
supplied next-token loss, and the loss-weight schedules.

The similarity loss is a two-way InfoNCE-style cross entropy over the
temperature-scaled cosine similarities of a query vector to the positive
and negative set centroids. Gradients are hand-derived (chain rule
through member-mean, renormalization, and cosine) and validated against
central finite differences; the finite-difference path is the arbiter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .embeddings import normalize
from .errors import (
    EmptySet,
    InvalidConfig,
    InvalidTemperature,
    StepOutOfRange,
    ValidationError,
    ZeroVector,
)

ScheduleKind = Literal["constant", "linear", "cosine"]
SCHEDULE_KINDS = ("constant", "linear", "cosine")

#: Default temperature for the similarity logits.
DEFAULT_TEMPERATURE = 0.07


@dataclass(frozen=True)
class LossTerms:
    """Inputs of the combined objective for one sample.

    ``nt_loss`` is the externally computed next-token loss; this package
    never runs a language model.
    """

    sim_pos: float
    sim_neg: float
    temperature: float = DEFAULT_TEMPERATURE
    truth: Literal["positive", "negative"] = "positive"
    nt_loss: float = 0.0
    nt_weight: float = 1.0
    sim_weight: float = 0.0

    def __post_init__(self):
        if not (self.temperature > 0.0 and math.isfinite(self.temperature)):
            raise InvalidTemperature(f"temperature must be > 0, got {self.temperature}")
        for name in ("sim_pos", "sim_neg"):
            value = getattr(self, name)
            if not -1.0 - 1e-9 <= value <= 1.0 + 1e-9:
                raise ValidationError(f"{name} must be a cosine in [-1, 1], got {value}")
        if self.truth not in ("positive", "negative"):
            raise ValidationError(f"unknown truth {self.truth!r}")
        if self.nt_loss < 0 or self.nt_weight < 0 or self.sim_weight < 0:
            raise ValidationError("nt_loss and loss weights must be non-negative")


def _stable_cross_entropy(logit_true: float, logit_other: float) -> float:
    # -log softmax([logit_true, logit_other])[0] in max-subtracted form,
    # i.e. softplus(logit_other - logit_true); log1p keeps full relative
    # precision when the loss saturates toward zero.
    delta = logit_true - logit_other
    return math.log1p(math.exp(-abs(delta))) + max(-delta, 0.0)


def sim_loss(terms: LossTerms) -> float:
    """Cross entropy of [sim_pos/T, sim_neg/T] against the truth side."""
    zp = terms.sim_pos / terms.temperature
    zn = terms.sim_neg / terms.temperature
    if terms.truth == "positive":
        return _stable_cross_entropy(zp, zn)
    return _stable_cross_entropy(zn, zp)


def combined_loss(terms: LossTerms) -> float:
    """Weighted sum nt_weight * nt_loss + sim_weight * sim_loss."""
    return terms.nt_weight * terms.nt_loss + terms.sim_weight * sim_loss(terms)


class GradientBundle(NamedTuple):
    """Gradients of the contrastive loss w.r.t. raw input coordinates."""

    query: np.ndarray
    positives: np.ndarray  # (k_pos, dim), one row per member
    negatives: np.ndarray  # (k_neg, dim)


def _as_member_matrix(members: Sequence, what: str) -> np.ndarray:
    if len(members) == 0:
        raise EmptySet(f"no {what} member vectors")
    mat = np.asarray([np.asarray(m, dtype=np.float64) for m in members])
    if mat.ndim != 2:
        raise ValidationError(f"{what} members must be a list of vectors")
    return mat


def contrastive_forward(
    query,
    positives: Sequence,
    negatives: Sequence,
    temperature: float = DEFAULT_TEMPERATURE,
    truth: Literal["positive", "negative"] = "positive",
) -> float:
    """Full composition: member means -> renormalized centroids -> cosines
    -> similarity cross entropy. Defined for off-sphere inputs so finite
    differences can probe it."""
    v = np.asarray(query, dtype=np.float64)
    pos = _as_member_matrix(positives, "positive")
    neg = _as_member_matrix(negatives, "negative")
    sim_pos = _cosine_to_mean(v, pos)
    sim_neg = _cosine_to_mean(v, neg)
    return sim_loss(LossTerms(sim_pos, sim_neg, temperature, truth))


def _cosine_to_mean(v: np.ndarray, members: np.ndarray) -> float:
    mean = members.mean(axis=0)
    norm_mean = float(np.linalg.norm(mean))
    norm_v = float(np.linalg.norm(v))
    if norm_mean < 1e-12 or norm_v < 1e-12:
        raise ZeroVector("centroid or query collapsed to the zero vector")
    # cos(v, normalize(mean)) == cos(v, mean); renormalization cancels.
    return float(np.dot(v, mean) / (norm_v * norm_mean))


def contrastive_grads(
    query,
    positives: Sequence,
    negatives: Sequence,
    temperature: float = DEFAULT_TEMPERATURE,
    truth: Literal["positive", "negative"] = "positive",
) -> GradientBundle:
    """Closed-form gradients of ``contrastive_forward``.

    For unit query v, member mean m with unit direction m_hat, and
    s = cos(v, m):

        ds/dv   = (m_hat - s * v_hat) / |v|
        ds/dp_i = (v_hat - s * m_hat) / (k * |m|)   (equal for all members)

    combined with dL/ds = (softmax(s/T) - onehot(truth)) / T.
    """
    v = np.asarray(query, dtype=np.float64)
    pos = _as_member_matrix(positives, "positive")
    neg = _as_member_matrix(negatives, "negative")
    if not (temperature > 0 and math.isfinite(temperature)):
        raise InvalidTemperature(f"temperature must be > 0, got {temperature}")

    norm_v = float(np.linalg.norm(v))
    if norm_v < 1e-12:
        raise ZeroVector("query collapsed to the zero vector")
    v_hat = v / norm_v

    def side(members: np.ndarray):
        mean = members.mean(axis=0)
        norm_mean = float(np.linalg.norm(mean))
        if norm_mean < 1e-12:
            raise ZeroVector("centroid collapsed to the zero vector")
        m_hat = mean / norm_mean
        s = float(np.dot(v_hat, m_hat))
        return s, m_hat, norm_mean

    s_pos, pos_hat, pos_norm = side(pos)
    s_neg, neg_hat, neg_norm = side(neg)

    zp, zn = s_pos / temperature, s_neg / temperature
    m = max(zp, zn)
    ep, en = math.exp(zp - m), math.exp(zn - m)
    q_pos, q_neg = ep / (ep + en), en / (ep + en)
    g_pos = (q_pos - (1.0 if truth == "positive" else 0.0)) / temperature
    g_neg = (q_neg - (1.0 if truth == "negative" else 0.0)) / temperature

    grad_query = (
        g_pos * (pos_hat - s_pos * v_hat) + g_neg * (neg_hat - s_neg * v_hat)
    ) / norm_v
    grad_pos_row = g_pos * (v_hat - s_pos * pos_hat) / (pos.shape[0] * pos_norm)
    grad_neg_row = g_neg * (v_hat - s_neg * neg_hat) / (neg.shape[0] * neg_norm)
    return GradientBundle(
        query=grad_query,
        positives=np.tile(grad_pos_row, (pos.shape[0], 1)),
        negatives=np.tile(grad_neg_row, (neg.shape[0], 1)),
    )


def finite_difference_grads(
    query,
    positives: Sequence,
    negatives: Sequence,
    temperature: float = DEFAULT_TEMPERATURE,
    truth: Literal["positive", "negative"] = "positive",
    h: float = 1e-5,
) -> GradientBundle:
    """Central-difference gradients of ``contrastive_forward``.

    Deliberately independent of the closed-form path: it only evaluates
    the forward function at perturbed coordinates.
    """
    v = np.asarray(query, dtype=np.float64).copy()
    pos = _as_member_matrix(positives, "positive").copy()
    neg = _as_member_matrix(negatives, "negative").copy()

    def f() -> float:
        return contrastive_forward(v, pos, neg, temperature, truth)

    def central(array: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(array)
        flat = array.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            up = f()
            flat[i] = original - h
            down = f()
            flat[i] = original
            gflat[i] = (up - down) / (2.0 * h)
        return grad

    return GradientBundle(query=central(v), positives=central(pos), negatives=central(neg))


def _block_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-8)
    return float(np.linalg.norm(analytic - numeric)) / scale


@dataclass(frozen=True)
class GradcheckResult:
    trials: int
    max_rel_error: float
    threshold: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def gradcheck(
    trials: int = 100,
    seed: int = 7,
    h: float = 1e-5,
    threshold: float = 1e-5,
    dims: tuple[int, int] = (4, 64),
    members: tuple[int, int] = (1, 6),
    temperature: float = DEFAULT_TEMPERATURE,
) -> GradcheckResult:
    """Compare closed-form and finite-difference gradients on random
    instances (unit-normalized Gaussian query and members)."""
    if trials < 1:
        raise InvalidConfig(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    max_err = 0.0
    failures = 0
    for _ in range(trials):
        dim = int(rng.integers(dims[0], dims[1] + 1))
        k_pos = int(rng.integers(members[0], members[1] + 1))
        k_neg = int(rng.integers(members[0], members[1] + 1))
        truth = "positive" if rng.random() < 0.5 else "negative"
        query = normalize(rng.standard_normal(dim))
        pos = [normalize(rng.standard_normal(dim)) for _ in range(k_pos)]
        neg = [normalize(rng.standard_normal(dim)) for _ in range(k_neg)]
        analytic = contrastive_grads(query, pos, neg, temperature, truth)
        numeric = finite_difference_grads(query, pos, neg, temperature, truth, h)
        err = max(
            _block_error(analytic.query, numeric.query),
            _block_error(analytic.positives, numeric.positives),
            _block_error(analytic.negatives, numeric.negatives),
        )
        max_err = max(max_err, err)
        if err >= threshold:
            failures += 1
    return GradcheckResult(trials, max_err, threshold, failures)


@dataclass(frozen=True)
class ScheduleConfig:
    """Loss-weight schedule over training progress.

    ``target_value`` is the constant scale C for the constant and cosine
    kinds, and the final-step ramp target for the linear kind.
    """

    kind: ScheduleKind
    target_value: float
    total_steps: int

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise InvalidConfig(f"unknown schedule kind {self.kind!r}")
        if self.target_value < 0:
            raise InvalidConfig(f"target_value must be >= 0, got {self.target_value}")
        if self.total_steps < 1 or int(self.total_steps) != self.total_steps:
            raise InvalidConfig(f"total_steps must be a positive integer, got {self.total_steps}")


def schedule_weights(config: ScheduleConfig, current_step: int) -> tuple[float, float]:
    """(nt_weight, sim_weight) at a 0-indexed step.

    Progress is p = (current_step + 1) / total_steps, so the first step
    already carries 1/total_steps worth of progress and the last step has
    p = 1 exactly. Kinds:

    * constant: (1, C)
    * linear:   (1, p * target)
    * cosine:   (1 - cos(pi/2 * p), cos(pi/2 * p) * min(2p, 1) * C)

    The cosine pair hands influence from the similarity term to the
    next-token term as training completes, with a half-run warm-up ramp
    on the similarity side.
    """
    if not 0 <= current_step < config.total_steps:
        raise StepOutOfRange(
            f"step {current_step} outside [0, {config.total_steps})"
        )
    p = (current_step + 1) / config.total_steps
    if config.kind == "constant":
        return 1.0, config.target_value
    if config.kind == "linear":
        return 1.0, p * config.target_value
    # cos(pi/2 * 1.0) is ~6e-17 in floats; pin the exact endpoint.
    half_cos = 0.0 if p == 1.0 else math.cos(math.pi / 2.0 * p)
    return 1.0 - half_cos, half_cos * min(2.0 * p, 1.0) * config.target_value


def schedule_curve(config: ScheduleConfig) -> list[tuple[int, float, float, float]]:
    """(step, p, nt_weight, sim_weight) rows for the whole run."""
    rows = []
    for step in range(config.total_steps):
        nt_w, sim_w = schedule_weights(config, step)
        rows.append((step, (step + 1) / config.total_steps, nt_w, sim_w))
    return rows
