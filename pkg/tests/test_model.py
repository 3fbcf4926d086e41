import random

import pytest

from ipikit import (
    AnnotationSet,
    CATEGORIES,
    Category,
    DataError,
    Document,
    SpanAnnotation,
    merge_same_category,
    overlaps,
    token_overlap_count,
    tokenize,
)
from ipikit.model import PRIORITY

from conftest import random_document, random_spans


def span(start, end, category=Category.RELTIME, doc_id="d", snippet="", source="a"):
    return SpanAnnotation(doc_id, start, end, category, snippet, source)


class TestCategory:
    def test_exactly_nine(self):
        assert len(CATEGORIES) == 9
        assert {c.name for c in CATEGORIES} == {
            "BODY", "DETAILS", "SEC", "FAMILY", "FACILITY", "RELTIME", "LIFESTYLE", "PHI_REF", "OTHER",
        }

    def test_parse_roundtrip(self):
        for c in CATEGORIES:
            assert Category.parse(c.name) is c

    def test_parse_rejects_unknown(self):
        with pytest.raises(DataError):
            Category.parse("ADDRESS")

    def test_descriptions_present(self):
        for c in CATEGORIES:
            assert c.description and len(c.description) > 10

    def test_priority_covers_all(self):
        assert set(PRIORITY) == set(CATEGORIES)


class TestOverlaps:
    def test_sharing_a_character(self):
        assert overlaps(span(0, 5), span(4, 9)) is True

    def test_touching_boundaries(self):
        assert overlaps(span(0, 5), span(5, 9)) is False

    def test_containment(self):
        assert overlaps(span(2, 3), span(0, 10)) is True

    def test_mismatched_doc_is_usage_error(self):
        with pytest.raises(ValueError):
            overlaps(span(0, 5), span(0, 5, doc_id="other"))

    def test_symmetry(self):
        rng = random.Random(11)
        for _ in range(200):
            a_start = rng.randrange(0, 50)
            b_start = rng.randrange(0, 50)
            a = span(a_start, a_start + rng.randrange(1, 10))
            b = span(b_start, b_start + rng.randrange(1, 10))
            assert overlaps(a, b) == overlaps(b, a)


class TestTokenOverlapCount:
    text = "alpha beta gamma delta epsilon zeta"

    def tokens(self):
        return tokenize(self.text)

    def test_identical_coverage(self):
        toks = self.tokens()
        lo, hi = toks[3].start, toks[5].end
        assert token_overlap_count(span(lo, hi), span(lo, hi), toks) == 3

    def test_single_shared_token(self):
        toks = self.tokens()
        a = span(toks[0].start, toks[4].start - 1)  # tokens 0..3
        b = span(toks[3].start, toks[5].end)        # tokens 3..5
        assert token_overlap_count(a, b, toks) == 1

    def test_disjoint(self):
        toks = self.tokens()
        assert token_overlap_count(span(toks[0].start, toks[0].end), span(toks[2].start, toks[2].end), toks) == 0


class TestMergeSameCategory:
    def test_interval_union(self):
        merged = merge_same_category([span(0, 5), span(3, 8)])
        assert [(s.start, s.end) for s in merged] == [(0, 8)]

    def test_categories_kept_apart(self):
        merged = merge_same_category([span(0, 5), span(3, 8, Category.FAMILY)])
        assert len(merged) == 2

    def test_empty(self):
        assert merge_same_category([]) == []

    def test_touching_not_merged(self):
        merged = merge_same_category([span(0, 5), span(5, 8)])
        assert len(merged) == 2

    def test_transitive_chain(self):
        merged = merge_same_category([span(0, 5), span(4, 9), span(8, 12)])
        assert [(s.start, s.end) for s in merged] == [(0, 12)]

    def test_snippet_stitching(self):
        text = "one two three"
        a = SpanAnnotation("d", 0, 7, Category.SEC, text[0:7], "a")
        b = SpanAnnotation("d", 4, 13, Category.SEC, text[4:13], "a")
        (merged,) = merge_same_category([a, b])
        assert merged.snippet == text

    def test_idempotent_on_random_input(self):
        rng = random.Random(23)
        for _ in range(100):
            doc = random_document(rng)
            spans = random_spans(rng, doc)
            once = merge_same_category(spans)
            twice = merge_same_category(once)
            assert [s.key for s in once] == [s.key for s in twice]

    def test_covered_characters_never_grow(self):
        rng = random.Random(29)
        for _ in range(100):
            doc = random_document(rng)
            spans = random_spans(rng, doc)
            before = sum(s.end - s.start for s in spans)
            after = sum(s.end - s.start for s in merge_same_category(spans))
            assert after <= before
            same_cat_overlap = any(
                a is not b and a.category is b.category and max(a.start, b.start) < min(a.end, b.end)
                for a in spans
                for b in spans
            )
            if not same_cat_overlap:
                assert after == before


class TestSpanAnnotation:
    def test_rejects_inverted_offsets(self):
        with pytest.raises(DataError):
            SpanAnnotation("d", 5, 5, Category.BODY)

    def test_snippet_integrity(self):
        doc = Document("d", "some text here")
        good = SpanAnnotation("d", 5, 9, Category.BODY, "text")
        good.check_against(doc)
        stale = SpanAnnotation("d", 5, 9, Category.BODY, "tixt")
        with pytest.raises(DataError):
            stale.check_against(doc)

    def test_out_of_bounds(self):
        doc = Document("d", "short")
        with pytest.raises(DataError):
            SpanAnnotation("d", 0, 99, Category.BODY).check_against(doc)

    def test_immutable(self):
        s = span(0, 5)
        with pytest.raises(AttributeError):
            s.start = 2


class TestAnnotationSet:
    def test_deduplicates_and_merges(self):
        spans = [span(0, 5), span(0, 5), span(3, 8)]
        aset = AnnotationSet.from_spans("a", spans)
        assert [(__s.start, __s.end) for __s in aset.for_doc("d")] == [(0, 8)]

    def test_groups_by_document(self):
        spans = [span(0, 5), span(0, 5, doc_id="e")]
        aset = AnnotationSet.from_spans("a", spans)
        assert aset.documents() == ["d", "e"]
        assert len(aset) == 2

    def test_no_same_category_overlap_after_construction(self):
        rng = random.Random(31)
        for _ in range(50):
            doc = random_document(rng)
            aset = AnnotationSet.from_spans("a", random_spans(rng, doc, max_spans=10))
            spans = aset.for_doc(doc.doc_id)
            for i, a in enumerate(spans):
                for b in spans[i + 1:]:
                    if a.category is b.category:
                        assert not overlaps(a, b)
