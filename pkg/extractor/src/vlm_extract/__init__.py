"""Bridge from vision-language models to the linsep dataset format.

Runs a model over Bongard-style tasks, captures vision-encoder and
final-hidden-state embeddings at image-token positions, parses the
generated conclusions, and writes LSCE tensor files plus a manifest and
prediction files that the diagnostics toolkit loads unchanged.
"""

from .backends import EmbeddedImage, ToyBackend, make_backend
from .conclusions import parse_conclusion
from .prompts import PROMPT_STRATEGIES, build_prompt
from .runner import ExtractionConfig, ExtractionSummary, extract

__version__ = "0.1.0"

__all__ = [
    "EmbeddedImage",
    "ExtractionConfig",
    "ExtractionSummary",
    "PROMPT_STRATEGIES",
    "ToyBackend",
    "build_prompt",
    "extract",
    "make_backend",
    "parse_conclusion",
]
