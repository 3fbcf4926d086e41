"""Shared fixtures and random-instance generators for the test suite."""

from __future__ import annotations

import random

import pytest

from ipikit import CATEGORIES, Document, SpanAnnotation, tokenize

WORDS = (
    "patient admitted stable home review ward note morning treated seen".split()
    + "plan follow chart exam result normal fluid oral daily twice".split()
)


@pytest.fixture
def summary_doc() -> Document:
    # Fictitious discharge-summary-style text; phrases chosen to exercise
    # the formulaic categories.
    text = (
        "Patient is a 33-year-old male, admitted at 12:20 after a motor vehicle accident.\n"
        "He works as a carpenter and lives with his 28-year-old girlfriend.\n"
        "He was evaluated by the Emergency Department team and consulted with Orthopedics.\n"
        "Patient reports playing basketball once a week.\n"
    )
    return Document("summary-1", text)


def make_text(rng: random.Random, n_words: int, newline_every: int = 8) -> str:
    parts = []
    for i in range(n_words):
        parts.append(rng.choice(WORDS))
        parts.append("\n" if newline_every and (i + 1) % newline_every == 0 else " ")
    return "".join(parts).rstrip() + "\n"


def random_document(rng: random.Random, doc_id: str = "doc", n_words: int = 40) -> Document:
    return Document(doc_id, make_text(rng, n_words))


def random_spans(rng: random.Random, doc: Document, max_spans: int = 6) -> "list[SpanAnnotation]":
    """Arbitrary in-bounds spans; overlaps across categories allowed."""
    spans = []
    n = len(doc.text)
    for _ in range(rng.randint(0, max_spans)):
        start = rng.randrange(0, n - 1)
        end = rng.randrange(start + 1, min(n, start + 30) + 1)
        category = rng.choice(CATEGORIES)
        spans.append(SpanAnnotation(doc.doc_id, start, end, category, doc.text[start:end], "gen"))
    return spans


def random_token_aligned_spans(rng: random.Random, doc: Document, max_spans: int = 5):
    """Spans whose token footprints are pairwise non-adjacent.

    This is the shape for which BIO round-trips are exact: no two spans
    share or touch a token, so no merging or priority resolution occurs.
    Returns (spans, expected snapped (start, end, category) triples).
    """
    tokens = tokenize(doc.text)
    if len(tokens) < 2:
        return [], []
    picks = []
    cursor = 0
    while cursor < len(tokens) - 1 and len(picks) < max_spans:
        first = rng.randrange(cursor, len(tokens))
        width = rng.randint(1, 3)
        last = min(first + width - 1, len(tokens) - 1)
        picks.append((first, last))
        cursor = last + 2  # at least one token gap before the next span
    spans, expected = [], []
    for first, last in picks:
        if rng.random() < 0.7:
            picked = rng.choice(CATEGORIES)
        else:
            picked = CATEGORIES[0]
        ft, lt = tokens[first], tokens[last]
        prev_end = tokens[first - 1].end if first > 0 else 0
        next_start = tokens[last + 1].start if last + 1 < len(tokens) else len(doc.text)
        start = rng.randrange(prev_end, ft.end)
        end = rng.randrange(max(start + 1, lt.start + 1), next_start + 1)
        spans.append(SpanAnnotation(doc.doc_id, start, end, picked, doc.text[start:end], "gen"))
        expected.append((ft.start, lt.end, picked))
    return spans, expected
