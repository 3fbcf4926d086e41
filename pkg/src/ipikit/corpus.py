"""Corpus ingestion and preprocessing.

Covers the JSONL document/annotation formats, the rule-based tokenizer,
span-to-BIO conversion (and its inverse), newline-aligned sectioning for
length-bounded sequence models, seeded corpus splits and per-category
statistics.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence, Union

from .model import (
    AnnotationSet,
    CATEGORIES,
    Category,
    DataError,
    Document,
    SpanAnnotation,
    Token,
    priority_rank,
)


class SectioningError(DataError):
    """A document cannot be sectioned under the given token budget."""


# Maximal runs of letters/digits form one token; every other
# non-whitespace character stands alone. (\w minus underscore keeps the
# rule Unicode-aware without dragging '_' into alphanumeric runs.)
_TOKEN_RE = re.compile(r"[^\W_]+|\S", re.UNICODE)


def tokenize(text: str) -> "list[Token]":
    """Split *text* into offset-bearing tokens.

    "12:20 pm" -> ["12", ":", "20", "pm"]; whitespace never appears in a
    token, so tokens cannot cross line breaks.
    """
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


@dataclass
class BioSequence:
    """Token-aligned BIO labels for one document section."""

    doc_id: str
    section_index: int
    tokens: "list[Token]"
    labels: "list[str]"

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise DataError(
                f"doc {self.doc_id!r} section {self.section_index}: "
                f"{len(self.tokens)} tokens vs {len(self.labels)} labels"
            )
        previous = "O"
        for i, label in enumerate(self.labels):
            if label != "O":
                prefix, _, name = label.partition("-")
                if prefix not in ("B", "I") or not name:
                    raise DataError(f"malformed BIO label {label!r} at token {i}")
                Category.parse(name)
                if prefix == "I" and previous not in (f"B-{name}", f"I-{name}"):
                    raise DataError(f"label {label!r} at token {i} has no preceding B-{name}/I-{name}")
            previous = label


def spans_to_bio(
    doc: Document,
    tokens: Sequence[Token],
    spans: Iterable[SpanAnnotation],
    section_index: int = 0,
) -> BioSequence:
    """Project character spans onto tokens as BIO labels.

    A token takes a span's category when they share at least one
    character. Where spans of different categories claim the same token,
    the higher-priority category wins. The first token of each maximal
    same-category run is B-, the rest I-.
    """
    spans = list(spans)
    for span in spans:
        span.check_against(doc)

    winner: "list[Optional[Category]]" = [None] * len(tokens)
    for i, tok in enumerate(tokens):
        best = None
        for span in spans:
            if max(tok.start, span.start) < min(tok.end, span.end):
                if best is None or priority_rank(span.category) < priority_rank(best):
                    best = span.category
        winner[i] = best

    labels = []
    for i, category in enumerate(winner):
        if category is None:
            labels.append("O")
        elif i > 0 and winner[i - 1] is category:
            labels.append(f"I-{category.name}")
        else:
            labels.append(f"B-{category.name}")
    return BioSequence(doc.doc_id, section_index, list(tokens), labels)


def bio_to_spans(seq: BioSequence, text: Optional[str] = None, source: str = "bio") -> "list[SpanAnnotation]":
    """Recover spans from a BIO sequence, one per maximal B/I run.

    Span boundaries snap to the run's first token start and last token
    end. Snippets are taken from *text* when provided (single-token runs
    fall back to the token text).
    """
    spans: "list[SpanAnnotation]" = []
    run_tokens: "list[Token]" = []
    run_category: Optional[Category] = None

    def flush():
        if not run_tokens:
            return
        start, end = run_tokens[0].start, run_tokens[-1].end
        if text is not None:
            snippet = text[start:end]
        elif len(run_tokens) == 1:
            snippet = run_tokens[0].text
        else:
            snippet = ""
        spans.append(SpanAnnotation(seq.doc_id, start, end, run_category, snippet, source))

    for tok, label in zip(seq.tokens, seq.labels):
        if label == "O":
            flush()
            run_tokens, run_category = [], None
        else:
            prefix, _, name = label.partition("-")
            category = Category.parse(name)
            if prefix == "B":
                flush()
                run_tokens, run_category = [tok], category
            else:
                run_tokens.append(tok)
    flush()
    return spans


@dataclass(frozen=True)
class Section:
    """A contiguous, newline-aligned slice of a document."""

    doc_id: str
    section_index: int
    start: int
    end: int
    token_count: int


def section_document(
    doc: Document,
    tokens: Sequence[Token],
    max_tokens: int,
    spans: Iterable[SpanAnnotation] = (),
) -> "list[Section]":
    """Cut a document into sections of at most *max_tokens* tokens.

    Boundaries sit only after newline characters. Sections fill greedily;
    when the greedy boundary would split an annotation, it retreats to
    the nearest earlier newline that avoids the split. Raises
    SectioningError when a single line exceeds the budget or no legal
    boundary exists.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be positive")
    spans = list(spans)
    for span in spans:
        span.check_against(doc)
    text = doc.text
    if not text:
        return []

    lines: "list[tuple[int, int]]" = []
    pos = 0
    while pos < len(text):
        nl = text.find("\n", pos)
        if nl == -1:
            lines.append((pos, len(text)))
            break
        lines.append((pos, nl + 1))
        pos = nl + 1

    counts = [0] * len(lines)
    li = 0
    for tok in tokens:
        while tok.start >= lines[li][1]:
            li += 1
        counts[li] += 1
    for idx, count in enumerate(counts):
        if count > max_tokens:
            raise SectioningError(
                f"doc {doc.doc_id!r}: line {idx + 1} has {count} tokens, over the limit of {max_tokens}"
            )

    sections: "list[Section]" = []
    i = 0
    while i < len(lines):
        total, j = 0, i
        while j < len(lines) and total + counts[j] <= max_tokens:
            total += counts[j]
            j += 1
        if j < len(lines):
            jj = j
            while jj > i and any(s.start < lines[jj][0] < s.end for s in spans):
                jj -= 1
            if jj == i:
                raise SectioningError(
                    f"doc {doc.doc_id!r}: no newline boundary near line {j + 1} avoids "
                    f"splitting an annotation within the {max_tokens}-token budget"
                )
            j = jj
        start, end = lines[i][0], lines[j - 1][1]
        sections.append(Section(doc.doc_id, len(sections), start, end, sum(counts[i:j])))
        i = j
    return sections


def spans_in_section(section: Section, spans: Iterable[SpanAnnotation]) -> "list[SpanAnnotation]":
    """Spans falling inside *section*, shifted to section-local offsets."""
    out = []
    for span in spans:
        if span.start >= section.start and span.end <= section.end:
            out.append(
                SpanAnnotation(
                    doc_id=span.doc_id,
                    start=span.start - section.start,
                    end=span.end - section.start,
                    category=span.category,
                    snippet=span.snippet,
                    source=span.source,
                    version=span.version,
                )
            )
    return out


@dataclass
class CorpusSplit:
    """Deterministic train/dev/test partition of document ids."""

    seed: int
    ratios: "tuple[float, float, float]"
    train: "list[str]"
    dev: "list[str]"
    test: "list[str]"

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train": self.train,
            "dev": self.dev,
            "test": self.test,
        }
        return json.dumps(payload, indent=2, sort_keys=False)


def split_corpus(doc_ids: Iterable[str], ratios: Sequence[float], seed: int) -> CorpusSplit:
    """Shuffle ids with the seeded RNG and cut floor-sized partitions.

    Sizes are floor(n * ratio); leftover documents go to train, then dev,
    which keeps the test set at or below its nominal fraction.
    """
    ids = list(doc_ids)
    if not ids:
        raise DataError("cannot split an empty corpus")
    if len(set(ids)) != len(ids):
        raise DataError("duplicate doc_ids in corpus")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"need three positive ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")

    ids = sorted(ids)
    random.Random(seed).shuffle(ids)
    n = len(ids)
    sizes = [int(n * r) for r in ratios]
    for k in range(n - sum(sizes)):
        sizes[k % 2] += 1  # leftovers: train first, then dev
    train = sorted(ids[: sizes[0]])
    dev = sorted(ids[sizes[0]: sizes[0] + sizes[1]])
    test = sorted(ids[sizes[0] + sizes[1]:])
    return CorpusSplit(seed, (ratios[0], ratios[1], ratios[2]), train, dev, test)


@dataclass
class CorpusStats:
    """Per-category annotation counts and proportions."""

    counts: "dict[Category, int]"
    total: int
    proportions: "dict[Category, float]"
    empty: bool = False


def corpus_stats(annotations: Union[AnnotationSet, Iterable[SpanAnnotation]]) -> CorpusStats:
    spans = annotations.all_spans() if isinstance(annotations, AnnotationSet) else list(annotations)
    counts = {c: 0 for c in CATEGORIES}
    for span in spans:
        counts[span.category] += 1
    total = sum(counts.values())
    if total == 0:
        return CorpusStats(counts, 0, {c: 0.0 for c in CATEGORIES}, empty=True)
    return CorpusStats(counts, total, {c: counts[c] / total for c in CATEGORIES})


# ---------------------------------------------------------------------------
# Wire formats


def read_documents(path: str) -> "dict[str, Document]":
    """Read JSONL documents ({"doc_id", "text"}); doc_ids must be unique."""
    docs: "dict[str, Document]" = {}
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            record = _parse_record(path, lineno, line, required=("doc_id", "text"))
            doc_id = record["doc_id"]
            if doc_id in docs:
                raise DataError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            meta = {k: v for k, v in record.items() if k not in ("doc_id", "text")}
            docs[doc_id] = Document(doc_id, record["text"], meta or None)
    return docs


def read_annotations(path: str, corpus: "Optional[dict[str, Document]]" = None) -> "list[SpanAnnotation]":
    """Read JSONL annotations ({"doc_id","start","end","label","source"}).

    When *corpus* is given, spans are bounds-checked against their
    documents and snippets are filled in from the text.
    """
    spans: "list[SpanAnnotation]" = []
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            record = _parse_record(path, lineno, line, required=("doc_id", "start", "end", "label"))
            try:
                category = Category.parse(record["label"])
                span = SpanAnnotation(
                    doc_id=record["doc_id"],
                    start=int(record["start"]),
                    end=int(record["end"]),
                    category=category,
                    snippet=record.get("snippet", ""),
                    source=record.get("source", ""),
                    version=int(record.get("version", 0)),
                )
                if corpus is not None:
                    if span.doc_id not in corpus:
                        raise DataError(f"unknown doc_id {span.doc_id!r}")
                    doc = corpus[span.doc_id]
                    span.check_against(doc)
                    if not span.snippet:
                        span = SpanAnnotation(
                            span.doc_id, span.start, span.end, span.category,
                            doc.text[span.start:span.end], span.source, span.version,
                        )
            except (DataError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            spans.append(span)
    return spans


def read_annotation_sets(
    path: str, corpus: "Optional[dict[str, Document]]" = None
) -> "dict[str, AnnotationSet]":
    """Group an annotation file by source into normalized AnnotationSets."""
    by_source: "dict[str, list[SpanAnnotation]]" = {}
    for span in read_annotations(path, corpus):
        by_source.setdefault(span.source, []).append(span)
    return {source: AnnotationSet.from_spans(source, spans) for source, spans in by_source.items()}


def _parse_record(path: str, lineno: int, line: str, required: "tuple[str, ...]") -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise DataError(f"{path}:{lineno}: expected a JSON object, got {type(record).__name__}")
    missing = [key for key in required if key not in record]
    if missing:
        raise DataError(f"{path}:{lineno}: missing field(s) {', '.join(missing)}")
    return record


def annotation_record(span: SpanAnnotation) -> dict:
    return {
        "doc_id": span.doc_id,
        "start": span.start,
        "end": span.end,
        "label": span.category.name,
        "source": span.source,
    }


def write_annotations(fp: IO[str], spans: Iterable[SpanAnnotation]) -> None:
    for span in spans:
        fp.write(json.dumps(annotation_record(span), ensure_ascii=False) + "\n")


def to_conll(sequences: Iterable[BioSequence]) -> str:
    """Render BIO sequences as CoNLL-style text.

    Each section starts with a ``-DOCSTART- <doc_id> <section_index>``
    sentinel followed by one ``token<TAB>label`` line per token; sections
    are separated by a blank line.
    """
    blocks = []
    for seq in sequences:
        lines = [f"-DOCSTART- {seq.doc_id} {seq.section_index}"]
        lines.extend(f"{tok.text}\t{label}" for tok, label in zip(seq.tokens, seq.labels))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")
