"""Parsing of generated conclusions.

The models are instructed to end with ``Conclusion: cat_1 or cat_2``;
in practice the line arrives with varying case, punctuation, markdown,
or not at all. The parser takes the last conclusion line, requires it to
name exactly one category, and maps cat_2 (rule followers) to
"positive" and cat_1 to "negative". Anything else is "invalid".
"""

from __future__ import annotations

import re

_CONCLUSION_LINE = re.compile(r"conclusion\s*[:\-]\s*(.*)", re.IGNORECASE)
_CATEGORY = re.compile(r"cat[_\s]?([12])\b", re.IGNORECASE)


def parse_conclusion(text: str) -> str:
    """Map generated text to "positive", "negative", or "invalid"."""
    if not text:
        return "invalid"
    matches = _CONCLUSION_LINE.findall(text)
    if not matches:
        return "invalid"
    tail = matches[-1]
    categories = {m for m in _CATEGORY.findall(tail)}
    if categories == {"2"}:
        return "positive"
    if categories == {"1"}:
        return "negative"
    return "invalid"  # no category, or both (e.g. an echoed format line)
