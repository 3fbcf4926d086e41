"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""

import json
import random
import time
from contextlib import contextmanager


from ipikit import (
    AnnotationSet,
    CATEGORIES,
    Category,
    Document,
    Outcome,
    RedactionPolicy,
    SpanAnnotation,
    bio_to_spans,
    corpus_stats,
    ground_extractions,
    pairwise_relaxed_f1,
    redact,
    spans_to_bio,
    split_corpus,
    tokenize,
    verify_redaction,
)
from ipikit.evaluation import SCHEMAS, Counts, _weight, align_document, precision_recall_f1
from ipikit.redaction import Action
from ipikit.corpus import section_document
from ipikit.service import ReviewStore, ServiceConfig, create_app

from conftest import random_document, random_token_aligned_spans
from test_agreement import all_pairs_oracle, toy_corpus
from test_corpus import TABLE_COUNTS, TABLE_PROPORTIONS, synthetic_count_spans
from test_evaluation import brute_force_max_correct


@contextmanager
def criterion(name):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL  {name}")
        raise
    else:
        print(f"PASS  {name}  ({time.perf_counter() - started:.2f}s)")


def spans_for(doc_id, rng, max_spans, source):
    spans = []
    for _ in range(rng.randint(0, max_spans)):
        start = rng.randrange(0, 400)
        end = start + rng.randint(1, 25)
        spans.append(SpanAnnotation(doc_id, start, end, rng.choice(CATEGORIES), source=source))
    return spans


def test_metric_arithmetic_consistency():
    with criterion("metric arithmetic: P/R -> micro F1 reference rows"):
        started = time.perf_counter()
        micro = Counts(correct=7254, missed=7800 - 7254, spurious=9300 - 7254)
        p, r, f1 = precision_recall_f1(_weight(micro, "type"), micro.actual, micro.possible)
        assert (p, r) == (0.78, 0.93)
        assert abs(f1 - 0.85) <= 0.005
        reltime = Counts(correct=8148, missed=8400 - 8148, spurious=9700 - 8148)
        p, r, f1 = precision_recall_f1(_weight(reltime, "type"), reltime.actual, reltime.possible)
        assert (p, r) == (0.84, 0.97)
        assert abs(f1 - 0.90) <= 0.005
        assert time.perf_counter() - started < 1.0


def test_reference_corpus_statistics(tmp_path):
    with criterion("corpus statistics: reference per-category proportions"):
        started = time.perf_counter()
        path = tmp_path / "ann.jsonl"
        with open(path, "w", encoding="utf-8") as fp:
            for i, span in enumerate(synthetic_count_spans()):
                fp.write(
                    json.dumps(
                        {
                            "doc_id": span.doc_id,
                            "start": span.start,
                            "end": span.end,
                            "label": span.category.name,
                            "source": "a",
                        }
                    )
                    + "\n"
                )
        from ipikit import read_annotations

        stats = corpus_stats(read_annotations(str(path)))
        assert stats.total == 6199
        assert {c: stats.counts[c] for c in CATEGORIES} == TABLE_COUNTS
        for category, expected_pct in TABLE_PROPORTIONS.items():
            assert abs(stats.proportions[category] * 100 - expected_pct) <= 0.01
        assert time.perf_counter() - started < 1.0


def test_split_arithmetic():
    with criterion("split arithmetic: 100 docs -> 60/15/25, seed-stable"):
        ids = [f"doc-{i:03d}" for i in range(100)]
        first = split_corpus(ids, (0.60, 0.15, 0.25), seed=2024)
        assert (len(first.train), len(first.dev), len(first.test)) == (60, 15, 25)
        combined = first.train + first.dev + first.test
        assert sorted(combined) == sorted(ids) and len(set(combined)) == 100
        again = split_corpus(list(reversed(ids)), (0.60, 0.15, 0.25), seed=2024)
        assert (first.train, first.dev, first.test) == (again.train, again.dev, again.test)


def test_evaluation_oracle_equivalence():
    with criterion("evaluation: alignment equals brute-force optimum on 1000 docs x 4 schemas"):
        started = time.perf_counter()
        rng = random.Random(20240501)
        mismatches = 0
        for i in range(1000):
            golds = spans_for("d", rng, 8, "gold")
            preds = spans_for("d", rng, 8, "system")
            for schema in SCHEMAS:
                pairs, _, _ = align_document(golds, preds, schema)
                got = sum(1 for _, _, outcome in pairs if outcome is Outcome.CORRECT)
                want = brute_force_max_correct(tuple(golds), tuple(preds), schema)
                if got != want:
                    mismatches += 1
        assert mismatches == 0
        assert time.perf_counter() - started < 60.0


def test_iaa_properties():
    with criterion("agreement: identity=1.0, symmetry on 500 pairs, toy micro=0.75"):
        rng = random.Random(7)
        # identical nonempty sets
        doc = random_document(rng, n_words=60)
        spans = [
            SpanAnnotation(doc.doc_id, t.start, t.end, rng.choice(CATEGORIES), t.text, "x")
            for t in tokenize(doc.text)[:10]
        ]
        report = pairwise_relaxed_f1(
            AnnotationSet.from_spans("a", spans), AnnotationSet.from_spans("b", spans), {doc.doc_id: doc}
        )
        assert report.micro.f1 == 1.0
        assert all(agg.f1 == 1.0 for agg in report.per_category.values())
        # exact symmetry on 500 random pairs
        for _ in range(500):
            d = random_document(rng, n_words=rng.randint(10, 50))
            corpus = {d.doc_id: d}
            sa, sb = [], []
            for bucket in (sa, sb):
                for _ in range(rng.randint(0, 5)):
                    start = rng.randrange(0, len(d.text) - 2)
                    end = rng.randrange(start + 1, min(len(d.text), start + 20))
                    bucket.append(SpanAnnotation(d.doc_id, start, end, rng.choice(CATEGORIES)))
            fwd = pairwise_relaxed_f1(AnnotationSet.from_spans("a", sa), AnnotationSet.from_spans("b", sb), corpus)
            bwd = pairwise_relaxed_f1(AnnotationSet.from_spans("b", sb), AnnotationSet.from_spans("a", sa), corpus)
            assert fwd.micro.f1 == bwd.micro.f1
            assert fwd.macro_f1 == bwd.macro_f1
            assert {c: agg.f1 for c, agg in fwd.per_category.items()} == {
                c: agg.f1 for c, agg in bwd.per_category.items()
            }
        # hand-computed toy case
        corpus, set_a, set_b = toy_corpus()
        toy_report = pairwise_relaxed_f1(set_a, set_b, corpus)
        assert toy_report.micro.f1 == 0.75
        toks = tokenize(corpus["toy"].text)
        assert all_pairs_oracle(set_a.for_doc("toy"), set_b.for_doc("toy"), toks) == (3, 3)


def test_bio_round_trip():
    with criterion("BIO: 1000-instance round trip, no I-without-B"):
        rng = random.Random(42)
        instances = 0
        while instances < 1000:
            doc = random_document(rng, n_words=rng.randint(5, 80))
            spans, expected = random_token_aligned_spans(rng, doc)
            tokens = tokenize(doc.text)
            seq = spans_to_bio(doc, tokens, spans)
            previous = "O"
            for label in seq.labels:
                if label.startswith("I-"):
                    assert previous in (f"B-{label[2:]}", f"I-{label[2:]}")
                previous = label
            got = [(s.start, s.end, s.category) for s in bio_to_spans(seq, doc.text)]
            assert got == expected
            instances += 1


def test_sectioning_safety():
    with criterion("sectioning: text-preserving, budget-respecting, span-safe"):
        rng = random.Random(77)
        from ipikit import SectioningError

        checked = 0
        while checked < 300:
            doc = random_document(rng, n_words=rng.randint(10, 150))
            tokens = tokenize(doc.text)
            spans, _ = random_token_aligned_spans(rng, doc, max_spans=5)
            max_tokens = rng.randint(10, 48)
            try:
                sections = section_document(doc, tokens, max_tokens, spans)
            except SectioningError:
                continue
            assert "".join(doc.text[s.start:s.end] for s in sections) == doc.text
            assert all(s.token_count <= max_tokens for s in sections)
            boundaries = [s.start for s in sections[1:]]
            for span in spans:
                for boundary in boundaries:
                    assert not (span.start < boundary < span.end)
            checked += 1


def test_grounding_synthetic_corpus():
    with criterion("grounding: 50 planted + 10 absent snippets over 20 docs"):
        rng = random.Random(1234)
        filler = "note exam stable plan review chart result daily fluid".split()
        planted = []  # (doc_index, snippet, offset, flip_case)
        docs = []
        snippet_id = 0
        for d in range(20):
            partserator = []
            text = ""
            for _ in range(rng.randint(3, 6)):
                text += " ".join(rng.choice(filler) for _ in range(rng.randint(4, 10))) + " "
            expected_here = []
            for _ in range(3 if d < 10 else 2):  # 10*3 + 10*2 = 50
                snippet = f"marker phrase q{snippet_id:02d}x"
                snippet_id += 1
                offset = len(text)
                text += snippet + " "
                expected_here.append((snippet, offset))
            text += " ".join(rng.choice(filler) for _ in range(5))
            docs.append(Document(f"doc-{d}", text))
            planted.append(expected_here)
        assert sum(len(p) for p in planted) == 50

        grounded_total, rejected_total = 0, 0
        absent_budget = 10
        for d, doc in enumerate(docs):
            queries = []
            expectations = []
            for snippet, offset in planted[d]:
                flip = rng.random() < 0.4
                queries.append((Category.OTHER, snippet.upper() if flip else snippet))
                expectations.append((offset, offset + len(snippet), "case-insensitive" if flip else "exact"))
            if absent_budget > 0:
                queries.append((Category.OTHER, f"zzqqvv jjkkww {absent_budget:02d}"))
                absent_budget -= 1
            report = ground_extractions(doc, queries)
            for grounded, (start, end, tier) in zip(report.grounded, expectations):
                assert (grounded.span.start, grounded.span.end) == (start, end)
                assert grounded.tier == tier
            grounded_total += len(report.grounded)
            rejected_total += len(report.rejected)
        assert grounded_total == 50 and rejected_total == 10
        assert rejected_total / (grounded_total + rejected_total) == 10 / 60


def test_redaction_safety():
    with criterion("redaction: 1000 verified triples, KEEP identity, worked example"):
        rng = random.Random(55)
        for _ in range(1000):
            doc = random_document(rng, n_words=rng.randint(5, 60))
            spans = []
            for _ in range(rng.randint(0, 6)):
                start = rng.randrange(0, len(doc.text) - 1)
                end = rng.randrange(start + 1, min(len(doc.text), start + 25) + 1)
                spans.append(SpanAnnotation(doc.doc_id, start, end, rng.choice(CATEGORIES)))
            policy = RedactionPolicy.from_mapping(
                {c: rng.choice(list(Action)) for c in CATEGORIES},
                rng.choice([Action.SUPPRESS, Action.PLACEHOLDER]),
                counters=rng.random() < 0.3,
            )
            result = redact(doc, spans, policy)
            ok, violations = verify_redaction(result, spans, doc, policy)
            assert ok, violations

        doc = random_document(rng)
        spans = [SpanAnnotation(doc.doc_id, 0, 5, Category.SEC)]
        keep_only = RedactionPolicy.from_mapping({}, Action.KEEP)
        assert redact(doc, spans, keep_only).text == doc.text

        carpenter = Document("w", "He works as a carpenter.")
        span = SpanAnnotation("w", 3, 23, Category.SEC, carpenter.text[3:23])
        assert redact(carpenter, [span], RedactionPolicy()).text == "He [SEC]."


def test_service_determinism(tmp_path):
    with criterion("service: replayed log exports byte-identical gold; stale version -> 409"):
        from fastapi.testclient import TestClient

        data_dir = str(tmp_path / "state")
        store = ReviewStore(data_dir, ("ann-a", "ann-b"))
        store.add_document(Document("doc-1", "Patient plays basketball weekly in the ICU.\n"))
        store.add_annotation("doc-1", 14, 24, "LIFESTYLE", "ann-a")
        store.add_annotation("doc-1", 14, 31, "LIFESTYLE", "ann-b")
        store.add_annotation("doc-1", 39, 42, "FACILITY", "ann-a")
        store.add_annotation("doc-1", 39, 42, "FACILITY", "ann-b")
        store.add_decision("doc-1", 14, 31, "ACCEPT_B", "lead", basis_version=4)
        exported = json.dumps(store.export_gold(), sort_keys=True, ensure_ascii=False).encode()

        replayed = ReviewStore(data_dir, ("ann-a", "ann-b"))
        assert json.dumps(replayed.export_gold(), sort_keys=True, ensure_ascii=False).encode() == exported

        client = TestClient(create_app(store, ServiceConfig(data_dir=data_dir, annotators=("ann-a", "ann-b"))))
        stale = client.post(
            "/docs/doc-1/decisions",
            json={"start": 14, "end": 31, "kind": "ACCEPT_A", "adjudicator": "x", "basis_version": 4},
        )
        assert stale.status_code == 409
