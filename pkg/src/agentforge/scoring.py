"""Scorers and answer extraction.

Exact match over grids/numbers/choices/text plus bag-of-tokens F1 for
reading-comprehension answers. Extraction is deliberately forgiving: a wrong
format never raises, it scores zero.
"""
from __future__ import annotations

import ast
import re
import string
from decimal import Decimal, InvalidOperation
from typing import Any, Callable, Optional

ANSWER_KINDS = ("grid", "number", "choice", "text")

_CHOICE_RE = re.compile(r"\b([A-D])\b")
_NUMBER_RE = re.compile(r"-?\d[\d,]*(?:\.\d+)?")
_GRID_RE = re.compile(r"\[\s*\[.*?\]\s*\]", re.DOTALL)
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b", re.UNICODE)
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def parse_grid(value: Any) -> Optional[list[list[int]]]:
    """Coerce a value into a rectangular integer grid, or None."""
    if isinstance(value, str):
        match = _GRID_RE.search(value)
        if match is None:
            return None
        try:
            value = ast.literal_eval(match.group(0))
        except (ValueError, SyntaxError):
            return None
    if not isinstance(value, (list, tuple)) or not value:
        return None
    rows = []
    width = None
    for row in value:
        if not isinstance(row, (list, tuple)) or not row:
            return None
        cells = []
        for cell in row:
            if isinstance(cell, bool) or not isinstance(cell, int):
                return None
            cells.append(int(cell))
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            return None
        rows.append(cells)
    return rows


def grid_to_text(grid: list[list[int]]) -> str:
    return str([list(row) for row in grid])


def normalize_number(text: Any) -> Optional[Decimal]:
    """Pull a comparable decimal out of a numeric answer string.

    The LAST number mentioned wins (models restate intermediates first), after
    stripping thousands separators and trailing punctuation, so "…= 348." and
    "348" compare equal.
    """
    if isinstance(text, (int, float)):
        return Decimal(str(text))
    matches = _NUMBER_RE.findall(str(text))
    if not matches:
        return None
    cleaned = matches[-1].replace(",", "").rstrip(".")
    try:
        return Decimal(cleaned).normalize()
    except InvalidOperation:
        return None


def extract_choice(text: str) -> Optional[str]:
    match = _CHOICE_RE.search(str(text))
    return match.group(1) if match else None


def _content_of(answer: Any) -> str:
    content = getattr(answer, "content", None)
    if content is not None:
        return str(content)
    return "" if answer is None else str(answer)


def extract_final_answer(answer: Any, kind: str) -> Any:
    """Normalize a forward() return (info or text) for its answer kind.

    grid -> parsed grid, number -> Decimal, choice -> single letter,
    text -> verbatim content. Returns None when nothing usable is found.
    """
    if kind not in ANSWER_KINDS:
        raise ValueError(f"unknown answer kind {kind!r}")
    content = _content_of(answer)
    if kind == "grid":
        return parse_grid(content)
    if kind == "number":
        return normalize_number(content)
    if kind == "choice":
        return extract_choice(content)
    return content


def _normalize_text(text: str) -> str:
    return " ".join(str(text).strip().lower().split())


def score_exact_match(prediction: Any, gold: Any, kind: str) -> float:
    """1.0 iff prediction equals gold after kind-specific normalization.

    Unparsable predictions score 0; this never raises for bad model output.
    """
    if kind == "grid":
        predicted = prediction if isinstance(prediction, list) else parse_grid(_content_of(prediction))
        reference = parse_grid(gold)
        return 1.0 if predicted is not None and predicted == reference else 0.0
    if kind == "number":
        predicted = prediction if isinstance(prediction, Decimal) else normalize_number(_content_of(prediction))
        reference = normalize_number(gold)
        return 1.0 if predicted is not None and reference is not None and predicted == reference else 0.0
    if kind == "choice":
        predicted = prediction if isinstance(prediction, str) and len(prediction) == 1 else extract_choice(_content_of(prediction))
        reference = extract_choice(str(gold))
        return 1.0 if predicted is not None and reference is not None and predicted == reference else 0.0
    if kind == "text":
        return 1.0 if _normalize_text(_content_of(prediction)) == _normalize_text(str(gold)) else 0.0
    raise ValueError(f"unknown answer kind {kind!r}")


def f1_tokens(text: str) -> list[str]:
    """Lowercase, drop punctuation and articles, whitespace-tokenize."""
    lowered = str(text).lower()
    no_punct = lowered.translate(_PUNCT_TABLE)
    no_articles = _ARTICLE_RE.sub(" ", no_punct)
    return no_articles.split()


def score_token_f1(prediction: Any, gold_variants: Any) -> float:
    """Bag-of-tokens F1 of the prediction against the best gold variant."""
    if isinstance(gold_variants, str):
        gold_variants = [gold_variants]
    gold_variants = list(gold_variants)
    if not gold_variants:
        raise ValueError("at least one gold variant required")
    from collections import Counter

    predicted = Counter(f1_tokens(_content_of(prediction)))
    best = 0.0
    for variant in gold_variants:
        reference = Counter(f1_tokens(variant))
        if not predicted and not reference:
            best = max(best, 1.0)
            continue
        overlap = sum((predicted & reference).values())
        if overlap == 0:
            continue
        precision = overlap / sum(predicted.values())
        recall = overlap / sum(reference.values())
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def vote_normalizer(kind: str) -> Callable[[str], str]:
    """Equivalence key used when tallying majority votes for a kind."""
    if kind == "grid":
        return lambda text: grid_to_text(parse_grid(text)) if parse_grid(text) is not None else _normalize_text(text)
    if kind == "number":
        return lambda text: str(normalize_number(text)) if normalize_number(text) is not None else _normalize_text(text)
    if kind == "choice":
        return lambda text: extract_choice(text) or _normalize_text(text)
    return _normalize_text
