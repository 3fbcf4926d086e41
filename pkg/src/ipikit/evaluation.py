"""Span evaluation under the SemEval-2013 task 9.1 matching schemas.

Four schemas classify an overlapping (gold, prediction) pair:

* strict  - correct only on identical boundaries and label
* exact   - correct on identical boundaries, label ignored
* partial - correct on identical boundaries, partial on any overlap
* type    - correct on any overlap with the same label (the default)

Per document, gold spans and predictions are aligned one-to-one by
outcome preference (correct > incorrect > partial) using maximum
bipartite matching per stage, so the number of correct pairs provably
equals the best achievable over all one-to-one alignments. Unaligned
gold spans count as missed, unaligned predictions as spurious.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (
    AnnotationSet,
    CATEGORIES,
    Category,
    DataError,
    Document,
    SpanAnnotation,
    span_sort_key,
)
from .corpus import tokenize

SCHEMAS = ("strict", "exact", "partial", "type")
MODES = ("char", "token")


class Outcome(enum.Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    PARTIAL = "partial"


def _overlap(gold: SpanAnnotation, pred: SpanAnnotation, mode: str, tokens) -> bool:
    if mode == "char":
        return max(gold.start, pred.start) < min(gold.end, pred.end)
    # Token mode: sharing a token counts even when the character ranges
    # themselves are disjoint.
    for tok in tokens:
        if (max(tok.start, gold.start) < min(tok.end, gold.end)
                and max(tok.start, pred.start) < min(tok.end, pred.end)):
            return True
    return False


def classify_pair(
    gold: SpanAnnotation,
    pred: SpanAnnotation,
    schema: str,
    mode: str = "char",
    tokens: Optional[Sequence] = None,
) -> Optional[Outcome]:
    """Classify one overlapping pair under *schema*; None when disjoint."""
    if schema not in SCHEMAS:
        raise ValueError(f"schema must be one of {SCHEMAS}")
    if gold.doc_id != pred.doc_id:
        raise ValueError("gold and prediction belong to different documents")
    if not _overlap(gold, pred, mode, tokens):
        return None
    exact_bounds = gold.start == pred.start and gold.end == pred.end
    same_label = gold.category is pred.category
    if schema == "strict":
        return Outcome.CORRECT if exact_bounds and same_label else Outcome.INCORRECT
    if schema == "exact":
        return Outcome.CORRECT if exact_bounds else Outcome.INCORRECT
    if schema == "partial":
        return Outcome.CORRECT if exact_bounds else Outcome.PARTIAL
    return Outcome.CORRECT if same_label else Outcome.INCORRECT  # type


def _max_matching(adjacency: "dict[int, list[int]]") -> "dict[int, int]":
    """Deterministic Kuhn matching; returns pred index -> gold index."""
    match_of_pred: "dict[int, int]" = {}

    def try_assign(g: int, banned: set) -> bool:
        for p in adjacency.get(g, ()):
            if p in banned:
                continue
            banned.add(p)
            if p not in match_of_pred or try_assign(match_of_pred[p], banned):
                match_of_pred[p] = g
                return True
        return False

    for g in sorted(adjacency):
        try_assign(g, set())
    return match_of_pred


def align_document(
    golds: Sequence[SpanAnnotation],
    preds: Sequence[SpanAnnotation],
    schema: str,
    mode: str = "char",
    tokens: Optional[Sequence] = None,
) -> "tuple[list[tuple[SpanAnnotation, SpanAnnotation, Outcome]], list[SpanAnnotation], list[SpanAnnotation]]":
    """One-to-one alignment of a document's spans.

    Returns (aligned pairs with outcomes, missed golds, spurious preds).
    Inputs are canonically sorted first, so the result does not depend on
    their order.
    """
    golds = sorted(golds, key=span_sort_key)
    preds = sorted(preds, key=span_sort_key)
    outcome: "list[list[Optional[Outcome]]]" = [
        [classify_pair(g, p, schema, mode, tokens) for p in preds] for g in golds
    ]

    pairs: "list[tuple[SpanAnnotation, SpanAnnotation, Outcome]]" = []
    gold_taken = [False] * len(golds)
    pred_taken = [False] * len(preds)
    for stage in (Outcome.CORRECT, Outcome.INCORRECT, Outcome.PARTIAL):
        adjacency = {
            gi: [pi for pi in range(len(preds)) if not pred_taken[pi] and outcome[gi][pi] is stage]
            for gi in range(len(golds))
            if not gold_taken[gi]
        }
        adjacency = {gi: ps for gi, ps in adjacency.items() if ps}
        for pi, gi in sorted(_max_matching(adjacency).items()):
            pairs.append((golds[gi], preds[pi], stage))
            gold_taken[gi] = True
            pred_taken[pi] = True

    missed = [golds[i] for i in range(len(golds)) if not gold_taken[i]]
    spurious = [preds[i] for i in range(len(preds)) if not pred_taken[i]]
    pairs.sort(key=lambda item: (span_sort_key(item[0]), span_sort_key(item[1])))
    return pairs, missed, spurious


@dataclass
class Counts:
    correct: int = 0
    incorrect: int = 0
    partial: int = 0
    missed: int = 0
    spurious: int = 0

    def add_outcome(self, outcome: Outcome) -> None:
        if outcome is Outcome.CORRECT:
            self.correct += 1
        elif outcome is Outcome.INCORRECT:
            self.incorrect += 1
        else:
            self.partial += 1

    @property
    def possible(self) -> int:
        return self.correct + self.incorrect + self.partial + self.missed

    @property
    def actual(self) -> int:
        return self.correct + self.incorrect + self.partial + self.spurious


def _weight(counts: Counts, schema: str) -> float:
    return counts.correct + 0.5 * counts.partial if schema == "partial" else float(counts.correct)


@dataclass
class CategoryEval:
    """Outcome counts for one category.

    ``gold`` attributes aligned-pair outcomes (plus missed) to the gold
    span's category; ``pred`` mirrors them (plus spurious) under the
    prediction's category. The two views differ only when a pair crosses
    categories, which the exact schema permits.
    """

    support: int = 0
    gold: Counts = field(default_factory=Counts)
    pred: Counts = field(default_factory=Counts)
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0


@dataclass
class EvalReport:
    schema: str
    mode: str
    per_category: "dict[Category, CategoryEval]"
    micro: Counts
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    total_support: int

    def to_payload(self) -> dict:
        rows = {}
        for category, ev in self.per_category.items():
            rows[category.name] = {
                "precision": round(ev.precision, 4),
                "recall": round(ev.recall, 4),
                "f1": round(ev.f1, 4),
                "support": ev.support,
                "correct": ev.gold.correct,
                "incorrect": ev.gold.incorrect,
                "partial": ev.gold.partial,
                "missed": ev.gold.missed,
                "spurious": ev.pred.spurious,
            }
        return {
            "schema": self.schema,
            "mode": self.mode,
            "per_category": rows,
            "micro": {
                "precision": round(self.micro_precision, 4),
                "recall": round(self.micro_recall, 4),
                "f1": round(self.micro_f1, 4),
                "support": self.total_support,
                "correct": self.micro.correct,
                "incorrect": self.micro.incorrect,
                "partial": self.micro.partial,
                "missed": self.micro.missed,
                "spurious": self.micro.spurious,
            },
            "macro": {
                "precision": round(self.macro_precision, 4),
                "recall": round(self.macro_recall, 4),
                "f1": round(self.macro_f1, 4),
                "support": self.total_support,
            },
        }


def precision_recall_f1(weight: float, actual: int, possible: int) -> "tuple[float, float, float]":
    precision = weight / actual if actual else 0.0
    recall = weight / possible if possible else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(
    gold: AnnotationSet,
    pred: AnnotationSet,
    schema: str = "type",
    mode: str = "char",
    corpus: "Optional[dict[str, Document]]" = None,
    doc_ids: Optional[Sequence[str]] = None,
) -> EvalReport:
    """Score *pred* against *gold* and aggregate per category and overall.

    The document universe defaults to the gold set's documents; a
    prediction for any other document is a data error. Token-overlap mode
    needs the corpus text.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"schema must be one of {SCHEMAS}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "token" and corpus is None:
        raise ValueError("token mode requires the corpus")

    universe = set(doc_ids) if doc_ids is not None else set(gold.documents())
    stray = [d for d in pred.documents() if d not in universe]
    if stray:
        raise DataError(f"predictions reference unknown doc_id(s): {', '.join(sorted(stray))}")

    per_category = {c: CategoryEval() for c in CATEGORIES}
    micro = Counts()
    for doc_id in sorted(universe):
        tokens = tokenize(corpus[doc_id].text) if mode == "token" else None
        golds = gold.for_doc(doc_id)
        preds = pred.for_doc(doc_id)
        pairs, missed, spurious = align_document(golds, preds, schema, mode, tokens)
        for g, p, outcome in pairs:
            per_category[g.category].gold.add_outcome(outcome)
            per_category[p.category].pred.add_outcome(outcome)
            micro.add_outcome(outcome)
        for g in missed:
            per_category[g.category].gold.missed += 1
            micro.missed += 1
        for p in spurious:
            per_category[p.category].pred.spurious += 1
            micro.spurious += 1

    reported: "dict[Category, CategoryEval]" = {}
    for category in CATEGORIES:
        ev = per_category[category]
        ev.support = ev.gold.possible
        if ev.support == 0 and ev.pred.actual == 0:
            continue
        ev.precision, _, _ = precision_recall_f1(_weight(ev.pred, schema), ev.pred.actual, ev.gold.possible)
        _, ev.recall, _ = precision_recall_f1(_weight(ev.gold, schema), ev.pred.actual, ev.gold.possible)
        denom = ev.precision + ev.recall
        ev.f1 = 2 * ev.precision * ev.recall / denom if denom else 0.0
        reported[category] = ev

    micro_p, micro_r, micro_f1 = precision_recall_f1(_weight(micro, schema), micro.actual, micro.possible)
    if reported:
        macro_p = sum(ev.precision for ev in reported.values()) / len(reported)
        macro_r = sum(ev.recall for ev in reported.values()) / len(reported)
        macro_f1 = sum(ev.f1 for ev in reported.values()) / len(reported)
    else:
        macro_p = macro_r = macro_f1 = 0.0
    return EvalReport(
        schema=schema,
        mode=mode,
        per_category=reported,
        micro=micro,
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=micro_f1,
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f1,
        total_support=micro.possible,
    )


def render_table(report: EvalReport) -> str:
    """Aligned-column text table: category rows, micro/macro footer."""
    headers = ("Category", "P", "R", "F1", "Support")
    rows = []
    for category, ev in report.per_category.items():
        rows.append((category.name, f"{ev.precision:.2f}", f"{ev.recall:.2f}", f"{ev.f1:.2f}", str(ev.support)))
    rows.append((
        "micro average",
        f"{report.micro_precision:.2f}", f"{report.micro_recall:.2f}",
        f"{report.micro_f1:.2f}", str(report.total_support),
    ))
    rows.append((
        "macro average",
        f"{report.macro_precision:.2f}", f"{report.macro_recall:.2f}",
        f"{report.macro_f1:.2f}", str(report.total_support),
    ))
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = [
        headers[0].ljust(widths[0]) + "  " + "  ".join(h.rjust(widths[i + 1]) for i, h in enumerate(headers[1:]))
    ]
    for row in rows:
        lines.append(row[0].ljust(widths[0]) + "  " + "  ".join(v.rjust(widths[i + 1]) for i, v in enumerate(row[1:])))
    return "\n".join(lines)
