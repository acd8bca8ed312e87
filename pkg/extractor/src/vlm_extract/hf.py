"""transformers-based backend for late-fusion models.

Position bookkeeping (pure, unit tested): image tokens appear in the
input sequence as consecutive runs of a dedicated token id; each run
belongs to one image, in prompt order. Final-stage embeddings are the
last hidden state at those positions; vision-stage embeddings are the
vision tower's output per image.

The model orchestration is best effort: it targets models whose
processor exposes an image token id and whose module tree names a vision
tower. It requires locally available weights and is not exercised by the
test suite.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .backends import EmbeddedImage
from .errors import ExtractError, ModelLoadError
from .prompts import PromptPlan

_VISION_MODULE_GUESSES = ("vision_tower", "vision_model", "visual", "vision_encoder")


def image_token_runs(input_ids: Sequence[int], image_token_id: int) -> list[list[int]]:
    """Consecutive runs of the image token id, one list of positions per image."""
    runs: list[list[int]] = []
    current: list[int] = []
    for position, token in enumerate(input_ids):
        if token == image_token_id:
            current.append(position)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs


def gather_rows(hidden: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Rows of a (sequence, dim) matrix at the given positions."""
    hidden = np.asarray(hidden)
    if hidden.ndim != 2:
        raise ExtractError(f"expected a (sequence, dim) matrix, got shape {hidden.shape}")
    if not positions:
        raise ExtractError("no image-token positions to gather")
    if max(positions) >= hidden.shape[0]:
        raise ExtractError(
            f"position {max(positions)} outside sequence of length {hidden.shape[0]}"
        )
    return hidden[np.asarray(positions, dtype=int)]


class HfBackend:
    def __init__(self, model_id: str, device: str | None = None, batch_size: int = 1,
                 vision_module: str | None = None):
        try:
            import torch
            from transformers import AutoModelForImageTextToText, AutoProcessor
        except ImportError as exc:
            raise ModelLoadError(f"torch/transformers unavailable: {exc}") from None
        self._torch = torch
        try:
            self.processor = AutoProcessor.from_pretrained(model_id)
            self.model = AutoModelForImageTextToText.from_pretrained(
                model_id, torch_dtype="auto"
            )
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_id!r}: {exc}") from None
        self.device = device or ("cuda" if torch.cuda.is_available() else "cpu")
        self.model.to(self.device).eval()
        self.image_token_id = getattr(self.model.config, "image_token_id", None)
        if self.image_token_id is None:
            raise ModelLoadError(f"model {model_id!r} does not expose an image token id")
        self._vision = self._find_vision_module(vision_module)

    def _find_vision_module(self, name: str | None):
        modules = dict(self.model.named_modules())
        if name is not None:
            if name not in modules:
                raise ModelLoadError(f"vision module {name!r} not found in the model")
            return modules[name]
        for guess in _VISION_MODULE_GUESSES:
            if guess in modules:
                return modules[guess]
        raise ModelLoadError(
            f"no vision tower found (tried {_VISION_MODULE_GUESSES}); pass vision_module"
        )

    def run_sample(self, plan: PromptPlan, slot_paths: Mapping[str, Path], sample_id: str):
        from PIL import Image

        torch = self._torch
        text = plan.text
        for slot in plan.slot_order:
            text = text.replace(f"<image:{slot}>", "<image>")
        images = [Image.open(slot_paths[slot]).convert("RGB") for slot in plan.slot_order]
        inputs = self.processor(text=text, images=images, return_tensors="pt").to(self.device)

        captured: list = []
        handle = self._vision.register_forward_hook(
            lambda module, args, output: captured.append(
                output[0] if isinstance(output, tuple) else output
            )
        )
        try:
            with torch.no_grad():
                forward = self.model(**inputs, output_hidden_states=True)
                generated = self.model.generate(**inputs, max_new_tokens=256)
        finally:
            handle.remove()

        input_ids = inputs["input_ids"][0].tolist()
        runs = image_token_runs(input_ids, self.image_token_id)
        if len(runs) != len(plan.slot_order):
            raise ExtractError(
                f"sample {sample_id!r}: found {len(runs)} image-token runs "
                f"for {len(plan.slot_order)} images"
            )
        final_hidden = forward.hidden_states[-1][0].float().cpu().numpy()
        vision_out = captured[0].float().cpu().numpy()
        if vision_out.ndim == 2:  # (tokens, dim) for a single packed batch
            vision_out = vision_out.reshape(len(plan.slot_order), -1, vision_out.shape[-1])

        embedded = {}
        for index, slot in enumerate(plan.slot_order):
            embedded[slot] = EmbeddedImage(
                vision_tokens=np.asarray(vision_out[index], dtype=np.float64),
                final_tokens=gather_rows(final_hidden, runs[index]),
                final_positions=tuple(runs[index]),
            )
        new_tokens = generated[0][len(input_ids):]
        answer = self.processor.batch_decode([new_tokens], skip_special_tokens=True)[0]
        return embedded, answer
