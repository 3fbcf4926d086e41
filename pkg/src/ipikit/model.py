"""Core data model: label schema, documents, tokens, spans and span algebra.

Every other module builds on this one. Offsets everywhere are 0-based
character offsets into the document text (Unicode scalar values, never
bytes), with half-open [start, end) intervals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional


class IpiError(Exception):
    """Base class for toolkit errors."""


class DataError(IpiError):
    """Malformed or inconsistent input data."""


class Category(enum.Enum):
    """Closed set of the nine indirect-identifier categories.

    The enum value is a human-readable description of what the category
    covers. SEC is the socio-economic/criminal-history category and
    PHI_REF holds references to direct identifiers.
    """

    BODY = "Appearance, weight, height and body modifications such as scars, tattoos or piercings"
    DETAILS = "Events that caused an injury or happened at the facility: accidents, aggression, refusals, statements or complaints"
    SEC = "Socio-economic and criminal history: employment, insurance, legal or social status"
    FAMILY = "Family structure, family medical history and family involvement in care"
    FACILITY = "Hospital names, units, labs, departments, services, teams, rooms and outside doctors"
    RELTIME = "Age and time expressions: timestamps, postoperative or day-of-life counts, medication timing"
    LIFESTYLE = "Habits and regular activities: sports, diet, tobacco, alcohol or substance use"
    PHI_REF = "Direct identifiers that survived de-identification, or text describing one (e.g. address hints)"
    OTHER = "Other infrequent sensitive attributes such as language, ethnicity or sexual orientation"

    @property
    def description(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "Category":
        try:
            return cls[name]
        except KeyError:
            known = ", ".join(c.name for c in cls)
            raise DataError(f"unknown category {name!r} (expected one of: {known})") from None

    def __str__(self) -> str:
        return self.name


CATEGORIES = tuple(Category)

# Cross-category conflict resolution order: rarest / highest-risk first.
# Consumers that must pick a single category for an overlapping region
# (BIO export, redaction labels) use this ranking.
PRIORITY = (
    Category.PHI_REF,
    Category.DETAILS,
    Category.SEC,
    Category.FAMILY,
    Category.BODY,
    Category.LIFESTYLE,
    Category.FACILITY,
    Category.RELTIME,
    Category.OTHER,
)
_PRIORITY_RANK = {c: i for i, c in enumerate(PRIORITY)}


def priority_rank(category: Category) -> int:
    """Smaller rank wins when overlapping spans disagree on category."""
    return _PRIORITY_RANK[category]


@dataclass(frozen=True)
class Document:
    """A source text with a stable identity. The text never mutates;
    all span offsets in the toolkit reference it directly."""

    doc_id: str
    text: str
    source_meta: Optional[Mapping] = None

    def __post_init__(self):
        if not self.doc_id:
            raise DataError("document requires a non-empty doc_id")


@dataclass(frozen=True)
class Token:
    """A tokenizer output unit; ``text`` is the exact document slice."""

    text: str
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise DataError(f"bad token offsets ({self.start}, {self.end})")
        if len(self.text) != self.end - self.start:
            raise DataError(f"token text length {len(self.text)} != span length {self.end - self.start}")


@dataclass(frozen=True)
class SpanAnnotation:
    """A labeled character span attributed to an annotator or system.

    ``snippet`` is a copy of the document text at creation time and
    serves as a staleness check; an empty snippet means "not captured"
    (e.g. annotations loaded without their documents).
    """

    doc_id: str
    start: int
    end: int
    category: Category
    snippet: str = ""
    source: str = ""
    version: int = 0

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise DataError(f"bad span offsets ({self.start}, {self.end}) in doc {self.doc_id!r}")
        if self.snippet and len(self.snippet) != self.end - self.start:
            raise DataError(
                f"snippet length {len(self.snippet)} != span length "
                f"{self.end - self.start} in doc {self.doc_id!r}"
            )

    @property
    def key(self):
        return (self.doc_id, self.start, self.end, self.category.name)

    def check_against(self, doc: Document) -> None:
        """Raise DataError if the span does not fit *doc* or its snippet is stale."""
        if self.doc_id != doc.doc_id:
            raise ValueError(f"span belongs to {self.doc_id!r}, not {doc.doc_id!r}")
        if self.end > len(doc.text):
            raise DataError(
                f"span ({self.start}, {self.end}) out of bounds for doc "
                f"{doc.doc_id!r} of length {len(doc.text)}"
            )
        if self.snippet and doc.text[self.start:self.end] != self.snippet:
            raise DataError(
                f"stale snippet in doc {doc.doc_id!r} at ({self.start}, {self.end}): "
                f"{self.snippet!r} != {doc.text[self.start:self.end]!r}"
            )


def overlaps(a: SpanAnnotation, b: SpanAnnotation) -> bool:
    """True iff the two spans share at least one character.

    Intervals are half-open, so spans that merely touch do not overlap.
    """
    if a.doc_id != b.doc_id:
        raise ValueError(f"cannot compare spans from different documents ({a.doc_id!r} vs {b.doc_id!r})")
    return max(a.start, b.start) < min(a.end, b.end)


def _char_overlap(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    return max(a_start, b_start) < min(a_end, b_end)


def token_overlap_count(a: SpanAnnotation, b: SpanAnnotation, tokens: Iterable[Token]) -> int:
    """Number of tokens that character-overlap both spans."""
    if a.doc_id != b.doc_id:
        raise ValueError(f"cannot compare spans from different documents ({a.doc_id!r} vs {b.doc_id!r})")
    count = 0
    for tok in tokens:
        if _char_overlap(tok.start, tok.end, a.start, a.end) and _char_overlap(tok.start, tok.end, b.start, b.end):
            count += 1
    return count


def span_sort_key(span: SpanAnnotation):
    return (span.start, span.end, span.category.name)


def merge_same_category(spans: Iterable[SpanAnnotation]) -> "list[SpanAnnotation]":
    """Union-merge overlapping spans of the same category.

    Spans of different categories are left alone even when they overlap.
    Merged spans carry a stitched snippet reconstructed from the inputs
    (empty when any covered character is only known from an empty
    snippet). Idempotent.
    """
    spans = list(spans)
    if not spans:
        return []
    doc_ids = {s.doc_id for s in spans}
    if len(doc_ids) > 1:
        raise ValueError(f"merge requires spans from a single document, got {sorted(doc_ids)}")

    merged: list[SpanAnnotation] = []
    by_cat: dict[Category, list[SpanAnnotation]] = {}
    for span in spans:
        by_cat.setdefault(span.category, []).append(span)
    for group in by_cat.values():
        group.sort(key=span_sort_key)
        chain = [group[0]]
        for span in group[1:]:
            if span.start < max(s.end for s in chain):  # strict overlap with the running union
                chain.append(span)
            else:
                merged.append(_union_span(chain))
                chain = [span]
        merged.append(_union_span(chain))
    merged.sort(key=span_sort_key)
    return merged


def _union_span(chain: "list[SpanAnnotation]") -> SpanAnnotation:
    if len(chain) == 1:
        return chain[0]
    start = min(s.start for s in chain)
    end = max(s.end for s in chain)
    chars: "list[Optional[str]]" = [None] * (end - start)
    for s in chain:
        if s.snippet:
            for i, ch in enumerate(s.snippet):
                chars[s.start - start + i] = ch
    snippet = "" if any(c is None for c in chars) else "".join(chars)  # type: ignore[arg-type]
    first = chain[0]
    return SpanAnnotation(
        doc_id=first.doc_id,
        start=start,
        end=end,
        category=first.category,
        snippet=snippet,
        source=first.source,
        version=max(s.version for s in chain),
    )


@dataclass
class AnnotationSet:
    """All spans from one source (an annotator or a system), grouped by
    document. Construction normalizes: exact duplicates are dropped and
    overlapping same-category spans are union-merged."""

    source: str
    by_doc: "dict[str, list[SpanAnnotation]]" = field(default_factory=dict)

    @classmethod
    def from_spans(cls, source: str, spans: Iterable[SpanAnnotation]) -> "AnnotationSet":
        grouped: "dict[str, list[SpanAnnotation]]" = {}
        for span in spans:
            grouped.setdefault(span.doc_id, []).append(span)
        normalized = {doc_id: merge_same_category(group) for doc_id, group in grouped.items()}
        return cls(source=source, by_doc=normalized)

    def documents(self) -> "list[str]":
        return sorted(self.by_doc)

    def for_doc(self, doc_id: str) -> "list[SpanAnnotation]":
        return self.by_doc.get(doc_id, [])

    def all_spans(self) -> "list[SpanAnnotation]":
        return [span for doc_id in self.documents() for span in self.by_doc[doc_id]]

    def __len__(self) -> int:
        return sum(len(v) for v in self.by_doc.values())
