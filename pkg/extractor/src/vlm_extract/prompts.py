"""Prompt construction for Bongard-style queries.

Four strategies vary how images are presented: interleaved with the
descriptive text or grouped at the end (labeled), with the query image
placed first or last. Rule-following examples are category cat_2,
counterexamples cat_1, and the model must answer with a line of the form
``Conclusion: cat_1`` or ``Conclusion: cat_2`` - the only part of the
output this package parses.

``build_prompt`` returns the prompt text with one ``<image:NAME>``
placeholder per image and the slot order; backends substitute their own
image tokens for the placeholders.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ExtractError

PROMPT_STRATEGIES = (
    "interleaved",
    "interleaved_query_first",
    "labeled",
    "labeled_query_first",
)

CONCLUSION_MODES = ("direct", "cot")

_DIRECT_INSTRUCTION = """\
Decide whether the query image belongs to cat_2 (it follows the shared rule)
or cat_1 (it does not). Answer with exactly one line in this form:
Conclusion: cat_1 or cat_2
Give a single category and nothing else on that line."""

_COT_INSTRUCTION = """\
Work step by step: state the rule the cat_2 images share, check the query
image against it, then give your answer. Use this output form:
Analysis: (your analysis)
Rule: (the shared rule)
Conclusion: cat_1 or cat_2
The conclusion line must name a single category."""


def _slots(prefix: str, count: int) -> list[str]:
    return [f"{prefix}{j}" for j in range(count)]


def _images(names: list[str]) -> str:
    return " ".join(f"<image:{name}>" for name in names)


@dataclass(frozen=True)
class PromptPlan:
    text: str
    slot_order: tuple[str, ...]  # placeholder names in appearance order


def build_prompt(strategy: str, k: int, conclusion_mode: str = "direct") -> PromptPlan:
    if strategy not in PROMPT_STRATEGIES:
        raise ExtractError(f"unknown prompt strategy {strategy!r}; choose from {PROMPT_STRATEGIES}")
    if conclusion_mode not in CONCLUSION_MODES:
        raise ExtractError(f"unknown conclusion mode {conclusion_mode!r}")
    pos, neg, query = _slots("p", k), _slots("n", k), ["q"]
    total = 2 * k + 1

    intro = f"This is a visual categorization task over {total} images."
    cat2 = f"These {k} images are cat_2 and all follow one shared rule: {_images(pos)}."
    cat1 = f"These {k} images are cat_1 and do not follow that rule: {_images(neg)}."
    query_last = f"This is the query image to categorize: {_images(query)}."
    query_first = f"The first image is the query to categorize: {_images(query)}."

    if strategy == "interleaved":
        body = [intro, cat2, cat1, query_last]
        order = pos + neg + query
    elif strategy == "interleaved_query_first":
        body = [intro, query_first, cat2, cat1]
        order = query + pos + neg
    elif strategy == "labeled":
        body = [
            intro,
            f"The first {k} images are cat_2 and share one rule; the next {k} are cat_1 "
            "and break it; the last image is the query.",
            f"cat_2 images: {_images(pos)} cat_1 images: {_images(neg)} "
            f"query image: {_images(query)}",
        ]
        order = pos + neg + query
    else:  # labeled_query_first
        body = [
            intro,
            f"The first image is the query; the next {k} images are cat_2 and share one "
            f"rule; the last {k} are cat_1 and break it.",
            f"query image: {_images(query)} cat_2 images: {_images(pos)} "
            f"cat_1 images: {_images(neg)}",
        ]
        order = query + pos + neg

    instruction = _DIRECT_INSTRUCTION if conclusion_mode == "direct" else _COT_INSTRUCTION
    return PromptPlan(text="\n".join(body) + "\n" + instruction, slot_order=tuple(order))
