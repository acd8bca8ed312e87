"""Model backends.

A backend runs one task sample (prompt plus images) and returns, per
image slot, the vision-encoder token embeddings, the final-hidden-state
token embeddings at that image's token positions, and the generated
text. ``ToyBackend`` is a deterministic stand-in used for structure
checks and tests: embeddings are seeded from pixel content (and, for the
final stage, the sample id, since real final-stage embeddings are
context dependent), and the "generation" applies a tiny nearest-mean
rule so its conclusions correlate with the embeddings. Real models plug
in through the same interface; see hf.py.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Protocol

import numpy as np
from PIL import Image

from .errors import ExtractError, ModelLoadError
from .prompts import PromptPlan


class EmbeddedImage(NamedTuple):
    vision_tokens: np.ndarray  # (vision token count, vision dim)
    final_tokens: np.ndarray  # (image token count, final dim)
    final_positions: tuple[int, ...]  # sequence positions backing final_tokens


class VlmBackend(Protocol):
    def run_sample(
        self, plan: PromptPlan, slot_paths: Mapping[str, Path], sample_id: str
    ) -> tuple[dict[str, EmbeddedImage], str]:
        """Embed every image slot and generate the model's answer text."""


def _pixel_digest(path: Path) -> bytes:
    try:
        with Image.open(path) as img:
            data = img.convert("RGB").tobytes()
    except OSError as exc:
        raise ExtractError(f"cannot read image {path}: {exc}") from None
    return hashlib.sha256(data).digest()


@dataclass
class ToyBackend:
    """Deterministic reference backend (no real model).

    ``garbage_every``: every nth generation returns unparseable text, to
    exercise the invalid-conclusion bookkeeping."""

    vision_dim: int = 12
    final_dim: int = 20
    vision_token_count: int = 5
    image_token_count: int = 3
    garbage_every: int = 0
    _calls: int = field(default=0, repr=False)

    def _rng(self, *parts: bytes) -> np.random.Generator:
        seed = int.from_bytes(hashlib.sha256(b"|".join(parts)).digest()[:8], "little")
        return np.random.default_rng(seed)

    def run_sample(self, plan, slot_paths, sample_id):
        embedded: dict[str, EmbeddedImage] = {}
        cursor = 0
        for slot in plan.slot_order:
            digest = _pixel_digest(Path(slot_paths[slot]))
            vision = self._rng(b"vision", digest).normal(
                size=(self.vision_token_count, self.vision_dim)
            )
            final = self._rng(b"final", digest, sample_id.encode()).normal(
                size=(self.image_token_count, self.final_dim)
            )
            positions = tuple(range(cursor, cursor + self.image_token_count))
            cursor += self.image_token_count + 7  # text tokens in between
            embedded[slot] = EmbeddedImage(vision, final, positions)

        self._calls += 1
        if self.garbage_every and self._calls % self.garbage_every == 0:
            return embedded, "I am not sure what the rule is here."
        return embedded, self._answer(plan, embedded)

    def _answer(self, plan: PromptPlan, embedded: dict[str, EmbeddedImage]) -> str:
        def mean_of(slots):
            return np.mean([embedded[s].final_tokens.mean(axis=0) for s in slots], axis=0)

        query = embedded["q"].final_tokens.mean(axis=0)
        pos = mean_of([s for s in plan.slot_order if s.startswith("p")])
        neg = mean_of([s for s in plan.slot_order if s.startswith("n")])

        def cos(a, b):
            return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))

        category = "cat_2" if cos(query, pos) >= cos(query, neg) else "cat_1"
        return f"Analysis: compared the query against both example sets.\nConclusion: {category}"


def make_backend(model: str, device: str | None = None, batch_size: int = 1) -> VlmBackend:
    if model == "toy":
        return ToyBackend()
    try:
        from .hf import HfBackend
    except ImportError as exc:
        raise ModelLoadError(
            f"model {model!r} needs the transformers backend (install the 'hf' extra): {exc}"
        ) from None
    return HfBackend(model, device=device, batch_size=batch_size)
