"""Inter-annotator agreement as average pairwise relaxed F1.

A span counts as matched when the other annotator has a same-label span
overlapping it by at least one token (or one character in char mode).
The pairwise score averages the two directed F1 values, which makes
symmetry exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import AnnotationSet, CATEGORIES, Category, DataError, Document, SpanAnnotation, Token
from .corpus import tokenize

MODES = ("token", "char")


def _spans_match(a: SpanAnnotation, b: SpanAnnotation, tokens: Optional[Sequence[Token]], mode: str) -> bool:
    if a.category is not b.category:
        return False
    if mode == "char":
        return max(a.start, b.start) < min(a.end, b.end)
    # Token mode: a shared token is enough even when the spans cover
    # disjoint characters of it.
    for tok in tokens:
        if max(tok.start, a.start) < min(tok.end, a.end) and max(tok.start, b.start) < min(tok.end, b.end):
            return True
    return False


def relaxed_match_count(
    gold: Sequence[SpanAnnotation],
    response: Sequence[SpanAnnotation],
    tokens: Optional[Sequence[Token]] = None,
    mode: str = "token",
) -> "tuple[int, int]":
    """Count spans on each side that have a same-label overlapping partner.

    Returns (matched_gold, matched_response); recall is matched_gold /
    len(gold) and precision matched_response / len(response).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "token" and tokens is None:
        raise ValueError("token mode requires the document's tokens")
    matched_gold = sum(1 for g in gold if any(_spans_match(g, r, tokens, mode) for r in response))
    matched_response = sum(1 for r in response if any(_spans_match(r, g, tokens, mode) for g in gold))
    return matched_gold, matched_response


@dataclass
class CategoryAgreement:
    f1: float
    a_total: int
    a_matched: int
    b_total: int
    b_matched: int


@dataclass
class AgreementReport:
    mode: str
    source_a: str
    source_b: str
    per_category: "dict[Category, CategoryAgreement]"
    micro: CategoryAgreement
    macro_f1: float

    def to_payload(self) -> dict:
        rows = {
            c.name: {
                "f1": round(agg.f1, 4),
                "a_total": agg.a_total,
                "a_matched": agg.a_matched,
                "b_total": agg.b_total,
                "b_matched": agg.b_matched,
            }
            for c, agg in self.per_category.items()
        }
        return {
            "mode": self.mode,
            "annotators": [self.source_a, self.source_b],
            "per_category": rows,
            "micro_f1": round(self.micro.f1, 4),
            "macro_f1": round(self.macro_f1, 4),
        }


def _directed_f1(matched_gold: int, n_gold: int, matched_resp: int, n_resp: int) -> float:
    recall = matched_gold / n_gold if n_gold else 0.0
    precision = matched_resp / n_resp if n_resp else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def _averaged_f1(a_matched: int, a_total: int, b_matched: int, b_total: int) -> float:
    forward = _directed_f1(a_matched, a_total, b_matched, b_total)
    backward = _directed_f1(b_matched, b_total, a_matched, a_total)
    return (forward + backward) / 2.0


def pairwise_relaxed_f1(
    a: AnnotationSet,
    b: AnnotationSet,
    corpus: "dict[str, Document]",
    mode: str = "token",
) -> AgreementReport:
    """Agreement between two annotation sets over a shared corpus.

    Match counts are pooled across documents before the micro ratio;
    macro F1 is the unweighted mean over categories annotated by either
    side.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    doc_ids = sorted(set(a.documents()) | set(b.documents()))
    missing = [d for d in doc_ids if d not in corpus]
    if missing:
        raise DataError(f"annotated document(s) missing from corpus: {', '.join(missing)}")

    a_total = {c: 0 for c in CATEGORIES}
    a_matched = {c: 0 for c in CATEGORIES}
    b_total = {c: 0 for c in CATEGORIES}
    b_matched = {c: 0 for c in CATEGORIES}

    for doc_id in doc_ids:
        spans_a = a.for_doc(doc_id)
        spans_b = b.for_doc(doc_id)
        tokens = tokenize(corpus[doc_id].text) if mode == "token" else None
        for category in CATEGORIES:
            ca = [s for s in spans_a if s.category is category]
            cb = [s for s in spans_b if s.category is category]
            if not ca and not cb:
                continue
            ma, mb = relaxed_match_count(ca, cb, tokens, mode)
            a_total[category] += len(ca)
            a_matched[category] += ma
            b_total[category] += len(cb)
            b_matched[category] += mb

    per_category: "dict[Category, CategoryAgreement]" = {}
    for category in CATEGORIES:
        if a_total[category] == 0 and b_total[category] == 0:
            continue
        per_category[category] = CategoryAgreement(
            f1=_averaged_f1(a_matched[category], a_total[category], b_matched[category], b_total[category]),
            a_total=a_total[category],
            a_matched=a_matched[category],
            b_total=b_total[category],
            b_matched=b_matched[category],
        )

    micro = CategoryAgreement(
        f1=_averaged_f1(
            sum(a_matched.values()), sum(a_total.values()),
            sum(b_matched.values()), sum(b_total.values()),
        ),
        a_total=sum(a_total.values()),
        a_matched=sum(a_matched.values()),
        b_total=sum(b_total.values()),
        b_matched=sum(b_matched.values()),
    )
    macro_f1 = (
        sum(agg.f1 for agg in per_category.values()) / len(per_category) if per_category else 0.0
    )
    return AgreementReport(mode, a.source, b.source, per_category, micro, macro_f1)
