"""Rule-based baseline tagger and grounding of free-text extractions.

The tagger covers the formulaic categories (times and ages, facility
names, lifestyle keywords) with regexes and gazetteers loaded from a
line-oriented rule file. Grounding resolves model-extracted snippets
back to source offsets through an exact / case-insensitive / fuzzy tier
cascade, so downstream consumers only ever see spans that verifiably
exist in the document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

from .model import Category, DataError, Document, SpanAnnotation

RULE_KINDS = ("regex", "gazetteer")

TIER_EXACT = "exact"
TIER_CI = "case-insensitive"
TIER_FUZZY = "fuzzy"


class RuleFileError(DataError):
    """A rule file failed to parse or a pattern failed to compile."""


@dataclass(frozen=True)
class Rule:
    category: Category
    kind: str
    pattern: str
    case_insensitive: bool
    line_no: int
    compiled: "re.Pattern" = field(compare=False, repr=False, default=None)


def _compile_rule(category: Category, kind: str, pattern: str, case_insensitive: bool, line_no: int, origin: str) -> Rule:
    flags = re.IGNORECASE if case_insensitive else 0
    if kind == "regex":
        body = pattern
    elif kind == "gazetteer":
        # Escape the phrase, let internal whitespace flex, and guard the
        # edges so "ER" does not fire inside "SEVERE".
        parts = [re.escape(part) for part in pattern.split()]
        body = r"\s+".join(parts)
        if pattern and (pattern[0].isalnum() or pattern[0] == "_"):
            body = r"(?<!\w)" + body
        if pattern and (pattern[-1].isalnum() or pattern[-1] == "_"):
            body = body + r"(?!\w)"
    else:
        raise RuleFileError(f"{origin}:{line_no}: unknown rule kind {kind!r} (expected regex or gazetteer)")
    try:
        compiled = re.compile(body, flags)
    except re.error as exc:
        raise RuleFileError(f"{origin}:{line_no}: invalid pattern {pattern!r}: {exc}") from None
    return Rule(category, kind, pattern, case_insensitive, line_no, compiled)


@dataclass
class RuleSet:
    """An ordered, validated collection of tagging rules."""

    name: str
    rules: "list[Rule]"

    @classmethod
    def from_lines(cls, name: str, lines: Iterable[str], origin: str = "<rules>") -> "RuleSet":
        rules = []
        for line_no, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise RuleFileError(
                    f"{origin}:{line_no}: expected CATEGORY<TAB>KIND<TAB>PATTERN[<TAB>flags], got {line!r}"
                )
            category = Category.parse(fields[0].strip())
            kind = fields[1].strip().lower()
            pattern = fields[2]
            flag_field = fields[3].strip().lower() if len(fields) > 3 else ""
            if flag_field not in ("", "ci", "cs"):
                raise RuleFileError(f"{origin}:{line_no}: unknown flag {flag_field!r} (expected ci or cs)")
            rules.append(_compile_rule(category, kind, pattern, flag_field == "ci", line_no, origin))
        return cls(name, rules)

    @classmethod
    def from_file(cls, path: str, name: Optional[str] = None) -> "RuleSet":
        with open(path, encoding="utf-8") as fp:
            return cls.from_lines(name or path, fp, origin=path)

    @classmethod
    def default(cls) -> "RuleSet":
        text = resources.files("ipikit").joinpath("rules/default.rules").read_text(encoding="utf-8")
        return cls.from_lines("default-rules", text.splitlines(), origin="default.rules")


def rule_tag(doc: Document, rules: RuleSet, source: Optional[str] = None) -> "list[SpanAnnotation]":
    """All rule matches over one document.

    Per rule, matches are the non-overlapping leftmost ones; across
    rules, overlaps are kept (downstream merge policy decides). Exact
    duplicates collapse, so rule file order within a category does not
    matter.
    """
    tagger = source or rules.name
    seen = set()
    spans = []
    for rule in rules.rules:
        for m in rule.compiled.finditer(doc.text):
            if m.start() == m.end():
                continue
            key = (m.start(), m.end(), rule.category.name)
            if key in seen:
                continue
            seen.add(key)
            spans.append(SpanAnnotation(doc.doc_id, m.start(), m.end(), rule.category, m.group(), tagger))
    spans.sort(key=lambda s: (s.start, s.end, s.category.name))
    return spans


# ---------------------------------------------------------------------------
# Grounding


@dataclass
class GroundedSpan:
    span: SpanAnnotation
    tier: str
    distance: int = 0
    ambiguous: bool = False
    alternates: "list[int]" = field(default_factory=list)


@dataclass
class RejectedSnippet:
    category: Category
    text: str
    reason: str


@dataclass
class GroundingReport:
    doc_id: str
    grounded: "list[GroundedSpan]"
    rejected: "list[RejectedSnippet]"

    @property
    def total(self) -> int:
        return len(self.grounded) + len(self.rejected)

    @property
    def hallucination_rate(self) -> float:
        return len(self.rejected) / self.total if self.total else 0.0

    def to_payload(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "grounded": [
                {
                    "start": g.span.start,
                    "end": g.span.end,
                    "label": g.span.category.name,
                    "snippet": g.span.snippet,
                    "tier": g.tier,
                    "distance": g.distance,
                    "ambiguous": g.ambiguous,
                    "alternates": g.alternates,
                }
                for g in self.grounded
            ],
            "rejected": [
                {"label": r.category.name, "snippet": r.text, "reason": r.reason} for r in self.rejected
            ],
            "total": self.total,
            "hallucination_rate": self.hallucination_rate,
        }


def _find_all(haystack: str, needle: str) -> "list[int]":
    starts = []
    i = haystack.find(needle)
    while i != -1:
        starts.append(i)
        i = haystack.find(needle, i + 1)
    return starts


def _fold(text: str) -> str:
    lowered = text.lower()
    # Offsets must survive folding; fall back to the original text for
    # the rare case pairs where lowercasing changes the length.
    return lowered if len(lowered) == len(text) else text


def proportional_edit_budget(snippet: str) -> int:
    """Default fuzzy allowance: two edits per 20 snippet characters."""
    return (len(snippet) * 2) // 20


def _best_fuzzy_window(text: str, pattern: str, budget: int) -> "Optional[tuple[int, int, int, list[int]]]":
    """Substring of *text* with minimal edit distance to *pattern*.

    Returns (distance, start, end, alternate_starts) for the best window
    with distance <= budget, preferring smaller distance, then earlier
    start, then shorter window. None when nothing qualifies.
    """
    n, m = len(text), len(pattern)
    if m == 0 or budget < 0:
        return None
    budget = min(budget, m - 1)  # never allow the pattern to vanish entirely
    # Sellers' algorithm: free start position, tracked via per-cell start.
    prev = [(0, j) for j in range(n + 1)]
    for i in range(1, m + 1):
        cur = [(i, 0)] * (n + 1)
        for j in range(1, n + 1):
            p_char = pattern[i - 1]
            best = (prev[j - 1][0] + (p_char != text[j - 1]), prev[j - 1][1])
            cand = (prev[j][0] + 1, prev[j][1])
            if cand < best:
                best = cand
            cand = (cur[j - 1][0] + 1, cur[j - 1][1])
            if cand < best:
                best = cand
            cur[j] = best
        prev = cur
    candidates = []
    for j in range(n + 1):
        dist, start = prev[j]
        if dist <= budget and j > start:
            candidates.append((dist, start, j))
    if not candidates:
        return None
    candidates.sort()
    dist, start, end = candidates[0]
    alternates = sorted({s for d, s, _ in candidates if d == dist and s != start})
    return dist, start, end, alternates


def ground_extractions(
    doc: Document,
    snippets: "Sequence[tuple[Category, str]]",
    max_edit_distance: Optional[int] = None,
    source: str = "grounded",
) -> GroundingReport:
    """Resolve (category, snippet) extractions to verified source spans.

    Tier cascade per snippet: exact substring, then case-insensitive
    substring, then the best fuzzy window within the edit budget
    (proportional to snippet length unless *max_edit_distance* pins it).
    Multiple occurrences ground at the earliest offset and are flagged
    ambiguous. Unresolvable snippets are rejected, never guessed.
    """
    grounded: "list[GroundedSpan]" = []
    rejected: "list[RejectedSnippet]" = []
    folded_text = _fold(doc.text)

    for category, snippet in snippets:
        if not snippet:
            rejected.append(RejectedSnippet(category, snippet, "empty snippet"))
            continue

        starts = _find_all(doc.text, snippet)
        tier = TIER_EXACT
        if not starts:
            folded_snippet = _fold(snippet)
            if len(folded_snippet) == len(snippet):
                starts = _find_all(folded_text, folded_snippet)
                tier = TIER_CI
        if starts:
            start = starts[0]
            span = SpanAnnotation(
                doc.doc_id, start, start + len(snippet), category,
                doc.text[start:start + len(snippet)], source,
            )
            grounded.append(GroundedSpan(span, tier, 0, len(starts) > 1, starts[1:]))
            continue

        budget = max_edit_distance if max_edit_distance is not None else proportional_edit_budget(snippet)
        hit = _best_fuzzy_window(folded_text, _fold(snippet), budget) if budget > 0 else None
        if hit is not None:
            distance, start, end, alternates = hit
            span = SpanAnnotation(doc.doc_id, start, end, category, doc.text[start:end], source)
            grounded.append(GroundedSpan(span, TIER_FUZZY, distance, bool(alternates), alternates))
        else:
            rejected.append(RejectedSnippet(category, snippet, "not found"))

    return GroundingReport(doc.doc_id, grounded, rejected)
