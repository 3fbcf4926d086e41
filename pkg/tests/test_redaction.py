import random

import pytest

from ipikit import (
    Action,
    CATEGORIES,
    Category,
    DataError,
    Document,
    RedactionPolicy,
    SpanAnnotation,
    redact,
    remap_spans,
    verify_redaction,
)
from ipikit.model import priority_rank

from conftest import random_document, random_spans

CARPENTER = Document("d", "He works as a carpenter.")
CARPENTER_SPAN = SpanAnnotation("d", 3, 23, Category.SEC, CARPENTER.text[3:23], "gold")


class TestPolicy:
    def test_every_category_resolves(self):
        policy = RedactionPolicy.from_mapping({Category.SEC: Action.SUPPRESS}, Action.KEEP)
        for category in CATEGORIES:
            expected = Action.SUPPRESS if category is Category.SEC else Action.KEEP
            assert policy.action_for(category) is expected

    def test_fingerprint_stability(self):
        one = RedactionPolicy.from_mapping({Category.SEC: Action.SUPPRESS})
        two = RedactionPolicy.from_mapping({Category.SEC: Action.SUPPRESS})
        other = RedactionPolicy.from_mapping({Category.SEC: Action.KEEP})
        assert one.fingerprint() == two.fingerprint()
        assert one.fingerprint() != other.fingerprint()

    def test_from_file(self, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text('{"default": "KEEP", "actions": {"RELTIME": "SUPPRESS"}, "counters": true}')
        policy = RedactionPolicy.from_file(str(path))
        assert policy.action_for(Category.RELTIME) is Action.SUPPRESS
        assert policy.action_for(Category.BODY) is Action.KEEP
        assert policy.counters

    def test_bad_action_rejected(self, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text('{"actions": {"RELTIME": "SHRED"}}')
        with pytest.raises(DataError):
            RedactionPolicy.from_file(str(path))


class TestRedact:
    def test_placeholder_worked_example(self):
        result = redact(CARPENTER, [CARPENTER_SPAN], RedactionPolicy())
        assert result.text == "He [SEC]."

    def test_suppress_worked_example(self):
        policy = RedactionPolicy.from_mapping({Category.SEC: Action.SUPPRESS})
        result = redact(CARPENTER, [CARPENTER_SPAN], policy)
        assert result.text == "He ."

    def test_keep_only_policy_is_identity(self):
        policy = RedactionPolicy.from_mapping({}, Action.KEEP)
        result = redact(CARPENTER, [CARPENTER_SPAN], policy)
        assert result.text == CARPENTER.text

    def test_two_span_overlap_topologies(self):
        # Hand oracle over every topology of two placeholder spans: when
        # they overlap, one union region labeled by the higher-priority
        # category replaces both; otherwise two separate replacements.
        text = "0123456789abcdefghij"
        doc = Document("d", text)
        policy = RedactionPolicy()
        high, low = Category.PHI_REF, Category.RELTIME
        assert priority_rank(high) < priority_rank(low)
        topologies = [
            (2, 6, 10, 14),  # disjoint
            (2, 6, 6, 10),   # touching
            (2, 8, 5, 12),   # overlapping
            (2, 12, 5, 9),   # containment
            (3, 9, 3, 9),    # identical
        ]
        for s1, e1, s2, e2 in topologies:
            spans = [
                SpanAnnotation("d", s1, e1, low, text[s1:e1], "g"),
                SpanAnnotation("d", s2, e2, high, text[s2:e2], "g"),
            ]
            if max(s1, s2) < min(e1, e2):
                lo, hi = min(s1, s2), max(e1, e2)
                expected = text[:lo] + f"[{high.name}]" + text[hi:]
            else:
                first = (min(s1, s2), min(e1, e2), low if s1 < s2 else high)
                second = (max(s1, s2), max(e1, e2), high if s1 < s2 else low)
                expected = (
                    text[: first[0]] + f"[{first[2].name}]"
                    + text[first[1]: second[0]] + f"[{second[2].name}]"
                    + text[second[1]:]
                )
            result = redact(doc, spans, policy)
            assert result.text == expected, (s1, e1, s2, e2)

    def test_mixed_actions_follow_priority_category(self):
        text = "0123456789"
        doc = Document("d", text)
        policy = RedactionPolicy.from_mapping(
            {Category.PHI_REF: Action.SUPPRESS, Category.RELTIME: Action.PLACEHOLDER}
        )
        spans = [
            SpanAnnotation("d", 2, 6, Category.RELTIME, text[2:6], "g"),
            SpanAnnotation("d", 4, 8, Category.PHI_REF, text[4:8], "g"),
        ]
        result = redact(doc, spans, policy)
        assert result.text == "01" + "89"

    def test_counters_flag(self):
        text = "a ICU b ICU c"
        doc = Document("d", text)
        spans = [
            SpanAnnotation("d", 2, 5, Category.FACILITY, "ICU", "g"),
            SpanAnnotation("d", 8, 11, Category.FACILITY, "ICU", "g"),
        ]
        plain = redact(doc, spans, RedactionPolicy())
        assert plain.text == "a [FACILITY] b [FACILITY] c"
        numbered = redact(doc, spans, RedactionPolicy(counters=True))
        assert numbered.text == "a [FACILITY-1] b [FACILITY-2] c"

    def test_out_of_bounds_span(self):
        with pytest.raises(DataError):
            redact(CARPENTER, [SpanAnnotation("d", 0, 999, Category.SEC)], RedactionPolicy())

    def test_length_accounting(self):
        rng = random.Random(7)
        for _ in range(100):
            doc = random_document(rng)
            spans = random_spans(rng, doc)
            policy = RedactionPolicy.from_mapping(
                {c: rng.choice(list(Action)) for c in CATEGORIES}, rng.choice(list(Action))
            )
            result = redact(doc, spans, policy)
            removed = sum(
                e.src_end - e.src_start for e in result.offset_map if e.kind in ("placeholder", "removed")
            )
            added = sum(
                e.dst_end - e.dst_start for e in result.offset_map if e.kind == "placeholder"
            )
            assert len(result.text) == len(doc.text) - removed + added

    def test_offset_map_monotone(self):
        rng = random.Random(11)
        for _ in range(50):
            doc = random_document(rng)
            result = redact(doc, random_spans(rng, doc), RedactionPolicy())
            surviving = [e for e in result.offset_map if e.dst_start is not None]
            for prev, cur in zip(surviving, surviving[1:]):
                assert prev.dst_end <= cur.dst_start
                assert prev.src_end <= cur.src_start

    def test_per_category_counts(self):
        text = "w x y z"
        doc = Document("d", text)
        spans = [
            SpanAnnotation("d", 0, 1, Category.BODY, "w", "g"),
            SpanAnnotation("d", 4, 5, Category.BODY, "y", "g"),
            SpanAnnotation("d", 6, 7, Category.SEC, "z", "g"),
        ]
        result = redact(doc, spans, RedactionPolicy())
        assert result.counts[Category.BODY] == 2
        assert result.counts[Category.SEC] == 1


class TestVerifyRedaction:
    def test_clean_result(self):
        result = redact(CARPENTER, [CARPENTER_SPAN], RedactionPolicy())
        ok, violations = verify_redaction(result, [CARPENTER_SPAN], CARPENTER)
        assert ok and violations == []

    def test_vacuous_on_empty_spans(self):
        result = redact(CARPENTER, [], RedactionPolicy())
        ok, violations = verify_redaction(result, [], CARPENTER)
        assert ok and violations == []

    def test_strict_mode_flags_reoccurrence(self):
        text = "code red in bay 2; repeat code red"
        doc = Document("d", text)
        span = SpanAnnotation("d", 0, 8, Category.DETAILS, "code red", "g")
        result = redact(doc, [span], RedactionPolicy())
        ok, _ = verify_redaction(result, [span], doc)
        assert ok  # the mapped location itself is clean
        strict_ok, violations = verify_redaction(result, [span], doc, strict=True)
        assert not strict_ok
        assert "code red" in violations[0]

    def test_random_triples_always_verify(self):
        rng = random.Random(13)
        for _ in range(200):
            doc = random_document(rng)
            spans = random_spans(rng, doc)
            policy = RedactionPolicy.from_mapping(
                {c: rng.choice([Action.SUPPRESS, Action.PLACEHOLDER, Action.KEEP]) for c in CATEGORIES},
                rng.choice([Action.SUPPRESS, Action.PLACEHOLDER]),
            )
            result = redact(doc, spans, policy)
            ok, violations = verify_redaction(result, spans, doc, policy)
            assert ok, violations

    def test_detects_tampering(self):
        result = redact(CARPENTER, [CARPENTER_SPAN], RedactionPolicy())
        result.text = CARPENTER.text  # simulate a broken writer
        ok, violations = verify_redaction(result, [CARPENTER_SPAN], CARPENTER)
        assert not ok


class TestIdempotence:
    def test_re_redaction_changes_nothing(self):
        rng = random.Random(17)
        policy = RedactionPolicy()
        for _ in range(100):
            doc = random_document(rng)
            spans = random_spans(rng, doc)
            result = redact(doc, spans, policy)
            carried = remap_spans(result, spans)
            again = redact(Document(doc.doc_id, result.text), carried, policy)
            assert again.text == result.text
