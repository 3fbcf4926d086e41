"""Policy-driven redaction of curated spans with an auditable offset map.

Redaction is deliberately biased toward over-removal: overlapping
actionable spans are unioned and replaced as one region, labeled by the
highest-priority category present. The result carries an offset map so
every surviving or removed interval can be traced, plus a policy
fingerprint for the audit trail.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import CATEGORIES, Category, DataError, Document, SpanAnnotation, priority_rank


class Action(enum.Enum):
    SUPPRESS = "SUPPRESS"
    PLACEHOLDER = "PLACEHOLDER"
    KEEP = "KEEP"


@dataclass(frozen=True)
class RedactionPolicy:
    """Maps every category to an action; unlisted ones get the default.

    ``counters`` switches placeholders from ``[CAT]`` to ``[CAT-n]``;
    off by default because numbering creates linkage across a document.
    """

    actions: "tuple[tuple[Category, Action], ...]" = ()
    default_action: Action = Action.PLACEHOLDER
    counters: bool = False

    @classmethod
    def from_mapping(
        cls,
        actions: "dict[Category, Action]",
        default_action: Action = Action.PLACEHOLDER,
        counters: bool = False,
    ) -> "RedactionPolicy":
        ordered = tuple(sorted(actions.items(), key=lambda kv: kv[0].name))
        return cls(ordered, default_action, counters)

    @classmethod
    def from_file(cls, path: str) -> "RedactionPolicy":
        with open(path, encoding="utf-8") as fp:
            try:
                payload = json.load(fp)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid policy JSON: {exc}") from None
        try:
            actions = {
                Category.parse(name): Action(value) for name, value in payload.get("actions", {}).items()
            }
            default = Action(payload.get("default", Action.PLACEHOLDER.value))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
        return cls.from_mapping(actions, default, bool(payload.get("counters", False)))

    def action_for(self, category: Category) -> Action:
        for cat, action in self.actions:
            if cat is category:
                return action
        return self.default_action

    def fingerprint(self) -> str:
        payload = {
            "actions": {cat.name: action.value for cat, action in self.actions},
            "default": self.default_action.value,
            "counters": self.counters,
        }
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()
        return digest[:16]


KEPT = "kept"
PLACEHOLDER = "placeholder"
REMOVED = "removed"


@dataclass(frozen=True)
class MapEntry:
    """One interval of the original text and where it went."""

    src_start: int
    src_end: int
    kind: str
    dst_start: Optional[int] = None
    dst_end: Optional[int] = None
    category: Optional[Category] = None


@dataclass
class RedactionResult:
    doc_id: str
    text: str
    offset_map: "list[MapEntry]"
    counts: "dict[Category, int]"
    policy_fingerprint: str

    def map_interval(self, start: int, end: int) -> Optional[MapEntry]:
        """Map entry fully containing [start, end), if any."""
        for entry in self.offset_map:
            if entry.src_start <= start and end <= entry.src_end:
                return entry
        return None

    def to_payload(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "text": self.text,
            "policy_fingerprint": self.policy_fingerprint,
            "counts": {cat.name: n for cat, n in self.counts.items() if n},
            "offset_map": [
                {
                    "src": [e.src_start, e.src_end],
                    "kind": e.kind,
                    "dst": None if e.dst_start is None else [e.dst_start, e.dst_end],
                    "category": e.category.name if e.category else None,
                }
                for e in self.offset_map
            ],
        }


def _actionable_regions(
    doc: Document, spans: "list[SpanAnnotation]", policy: RedactionPolicy
) -> "list[tuple[int, int, Category]]":
    """Union overlapping actionable spans; label each region by priority."""
    actionable = []
    for span in spans:
        span.check_against(doc)
        if policy.action_for(span.category) is not Action.KEEP:
            actionable.append(span)
    actionable.sort(key=lambda s: (s.start, s.end))
    regions: "list[tuple[int, int, Category]]" = []
    for span in actionable:
        if regions and span.start < regions[-1][1]:
            start, end, category = regions[-1]
            if priority_rank(span.category) < priority_rank(category):
                category = span.category
            regions[-1] = (start, max(end, span.end), category)
        else:
            regions.append((span.start, span.end, span.category))
    return regions


def redact(doc: Document, spans: Iterable[SpanAnnotation], policy: RedactionPolicy) -> RedactionResult:
    """Apply *policy* to the given spans and return text plus audit data."""
    regions = _actionable_regions(doc, list(spans), policy)
    pieces = []
    offset_map: "list[MapEntry]" = []
    counts = {c: 0 for c in CATEGORIES}
    counters = {c: 0 for c in CATEGORIES}
    cursor = 0
    out_pos = 0

    def emit_kept(src_start: int, src_end: int):
        nonlocal out_pos
        if src_start >= src_end:
            return
        piece = doc.text[src_start:src_end]
        pieces.append(piece)
        offset_map.append(MapEntry(src_start, src_end, KEPT, out_pos, out_pos + len(piece)))
        out_pos += len(piece)

    for start, end, category in regions:
        emit_kept(cursor, start)
        action = policy.action_for(category)
        counts[category] += 1
        if action is Action.PLACEHOLDER:
            counters[category] += 1
            token = f"[{category.name}-{counters[category]}]" if policy.counters else f"[{category.name}]"
            pieces.append(token)
            offset_map.append(MapEntry(start, end, PLACEHOLDER, out_pos, out_pos + len(token), category))
            out_pos += len(token)
        else:
            offset_map.append(MapEntry(start, end, REMOVED, None, None, category))
        cursor = end
    emit_kept(cursor, len(doc.text))

    return RedactionResult(doc.doc_id, "".join(pieces), offset_map, counts, policy.fingerprint())


def verify_redaction(
    result: RedactionResult,
    spans: Iterable[SpanAnnotation],
    doc: Document,
    policy: Optional[RedactionPolicy] = None,
    strict: bool = False,
) -> "tuple[bool, list[str]]":
    """Post-hoc safety check on a redaction result.

    Confirms that no actionable span's text survives at its mapped
    location and that kept intervals copied faithfully. Strict mode also
    flags snippets that reappear anywhere in the output (noisy for short
    spans; off by default). When *policy* is given, KEEP-category spans
    are skipped.
    """
    violations: "list[str]" = []

    for entry in result.offset_map:
        if entry.kind == KEPT and result.text[entry.dst_start:entry.dst_end] != doc.text[entry.src_start:entry.src_end]:
            violations.append(
                f"kept interval ({entry.src_start}, {entry.src_end}) does not match the output"
            )

    for span in spans:
        if policy is not None and policy.action_for(span.category) is Action.KEEP:
            continue
        snippet = doc.text[span.start:span.end]
        label = f"span ({span.start}, {span.end}, {span.category.name})"
        for entry in result.offset_map:
            if entry.kind == KEPT and max(entry.src_start, span.start) < min(entry.src_end, span.end):
                violations.append(f"{label}: original characters survive in a kept interval")
                break
        entry = result.map_interval(span.start, span.end)
        if entry is not None and entry.kind == PLACEHOLDER:
            mapped = result.text[entry.dst_start:entry.dst_start + len(snippet)]
            if mapped == snippet:
                violations.append(f"{label}: snippet survives at its mapped location")
        if strict and snippet in result.text:
            violations.append(f"{label}: snippet {snippet!r} occurs elsewhere in the output")

    return not violations, violations


def remap_spans(result: RedactionResult, spans: Iterable[SpanAnnotation]) -> "list[SpanAnnotation]":
    """Carry spans over to the redacted text via the offset map.

    Spans inside suppressed regions disappear; spans inside placeholder
    regions become spans over the placeholder token. Spans that straddle
    map entries cannot be represented and are dropped.
    """
    remapped = []
    for span in spans:
        entry = result.map_interval(span.start, span.end)
        if entry is None or entry.kind == REMOVED:
            continue
        if entry.kind == KEPT:
            shift = entry.dst_start - entry.src_start
            start, end = span.start + shift, span.end + shift
        else:
            start, end = entry.dst_start, entry.dst_end
        remapped.append(
            SpanAnnotation(
                span.doc_id, start, end, span.category,
                result.text[start:end], span.source, span.version,
            )
        )
    return remapped
