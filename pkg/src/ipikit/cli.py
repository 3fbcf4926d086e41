"""Command-line entry point wiring the pipeline stages together.

Machine-readable output goes to stdout, diagnostics to stderr; every
subcommand except ``serve`` is deterministic given the same inputs and
flags, so stages compose in shell pipelines.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import corpus as corpus_io
from .agreement import pairwise_relaxed_f1
from .evaluation import SCHEMAS, evaluate, render_table
from .model import AnnotationSet, CATEGORIES, Category, DataError, IpiError
from .redaction import RedactionPolicy, redact, verify_redaction
from .tagging import RuleSet, ground_extractions, rule_tag


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _single_source_set(path: str, corpus=None, role: str = "annotations") -> AnnotationSet:
    sets = corpus_io.read_annotation_sets(path, corpus)
    if len(sets) > 1:
        raise DataError(
            f"{path}: {role} file mixes {len(sets)} sources ({', '.join(sorted(sets))}); "
            "split it by source first"
        )
    if not sets:
        return AnnotationSet.from_spans("", [])
    return next(iter(sets.values()))


def cmd_stats(args) -> int:
    spans = corpus_io.read_annotations(args.annotations)
    stats = corpus_io.corpus_stats(spans)
    if args.json:
        payload = {
            "counts": {c.name: stats.counts[c] for c in CATEGORIES},
            "proportions": {c.name: round(stats.proportions[c], 6) for c in CATEGORIES},
            "total": stats.total,
            "empty": stats.empty,
        }
        print(json.dumps(payload, indent=2))
        return 0
    width = max(len(c.name) for c in CATEGORIES)
    print(f"{'Category'.ljust(width)}  Annotations  Proportion")
    for category in CATEGORIES:
        pct = stats.proportions[category] * 100
        print(f"{category.name.ljust(width)}  {stats.counts[category]:>11d}  {pct:>9.2f}%")
    print(f"{'total'.ljust(width)}  {stats.total:>11d}")
    if stats.empty:
        print("note: annotation file is empty; proportions reported as zero", file=sys.stderr)
    return 0


def cmd_split(args) -> int:
    docs = corpus_io.read_documents(args.docs)
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
    except ValueError:
        return _fail(f"cannot parse --ratios {args.ratios!r}")
    split = corpus_io.split_corpus(sorted(docs), ratios, args.seed)
    manifest = split.to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fp:
            fp.write(manifest + "\n")
        print(
            f"wrote split of {len(docs)} docs ({len(split.train)}/{len(split.dev)}/{len(split.test)}) "
            f"to {args.output}",
            file=sys.stderr,
        )
    else:
        print(manifest)
    return 0


def cmd_bio(args) -> int:
    docs = corpus_io.read_documents(args.docs)
    annotations = _single_source_set(args.annotations, docs)
    sequences = []
    for doc_id in sorted(docs):
        doc = docs[doc_id]
        tokens = corpus_io.tokenize(doc.text)
        spans = annotations.for_doc(doc_id)
        for section in corpus_io.section_document(doc, tokens, args.max_tokens, spans):
            sec_tokens = [
                corpus_io.Token(t.text, t.start - section.start, t.end - section.start)
                for t in tokens
                if t.start >= section.start and t.end <= section.end
            ]
            sec_doc = corpus_io.Document(doc.doc_id, doc.text[section.start:section.end])
            sec_spans = corpus_io.spans_in_section(section, spans)
            sequences.append(
                corpus_io.spans_to_bio(sec_doc, sec_tokens, sec_spans, section.section_index)
            )
    output = corpus_io.to_conll(sequences)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fp:
            fp.write(output)
        print(f"wrote {len(sequences)} sections to {args.output}", file=sys.stderr)
    else:
        sys.stdout.write(output)
    return 0


def cmd_iaa(args) -> int:
    docs = corpus_io.read_documents(args.docs)
    set_a = _single_source_set(args.annotations_a, docs, "annotator A")
    set_b = _single_source_set(args.annotations_b, docs, "annotator B")
    report = pairwise_relaxed_f1(set_a, set_b, docs, mode=args.mode)
    if args.json:
        print(json.dumps(report.to_payload(), indent=2))
        return 0
    width = max(len("macro average"), *(len(c.name) for c in CATEGORIES))
    print(f"{'Category'.ljust(width)}  F1-Score")
    for category, agg in report.per_category.items():
        print(f"{category.name.ljust(width)}  {agg.f1:>8.2f}")
    print(f"{'micro average'.ljust(width)}  {report.micro.f1:>8.2f}")
    print(f"{'macro average'.ljust(width)}  {report.macro_f1:>8.2f}")
    return 0


def cmd_eval(args) -> int:
    docs = corpus_io.read_documents(args.docs) if args.docs else None
    if args.mode == "token" and docs is None:
        return _fail("--mode token requires --docs")
    gold = _single_source_set(args.gold, docs, "gold")
    pred = _single_source_set(args.predictions, docs, "predictions")
    doc_ids = sorted(docs) if docs else None
    report = evaluate(gold, pred, schema=args.schema, mode=args.mode, corpus=docs, doc_ids=doc_ids)
    if args.json:
        print(json.dumps(report.to_payload(), indent=2))
    else:
        print(render_table(report))
    return 0


def cmd_tag(args) -> int:
    docs = corpus_io.read_documents(args.docs)
    rules = RuleSet.from_file(args.rules) if args.rules else RuleSet.default()
    total = 0
    for doc_id in sorted(docs):
        spans = rule_tag(docs[doc_id], rules, source=args.source)
        corpus_io.write_annotations(sys.stdout, spans)
        total += len(spans)
    print(f"tagged {total} spans across {len(docs)} documents", file=sys.stderr)
    return 0


def cmd_ground(args) -> int:
    docs = corpus_io.read_documents(args.docs)
    per_doc: "dict[str, list]" = {}
    with open(args.extractions, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                doc_id = record["doc_id"]
                category = Category.parse(record["label"])
                snippets = record["snippets"]
            except (json.JSONDecodeError, KeyError, DataError) as exc:
                return _fail(f"{args.extractions}:{lineno}: {exc}")
            if doc_id not in docs:
                return _fail(f"{args.extractions}:{lineno}: unknown doc_id {doc_id!r}")
            per_doc.setdefault(doc_id, []).extend((category, s) for s in snippets)

    reports = []
    grounded_total = rejected_total = 0
    for doc_id in sorted(per_doc):
        report = ground_extractions(
            docs[doc_id], per_doc[doc_id], max_edit_distance=args.max_edit_distance, source=args.source
        )
        corpus_io.write_annotations(sys.stdout, [g.span for g in report.grounded])
        reports.append(report.to_payload())
        grounded_total += len(report.grounded)
        rejected_total += len(report.rejected)

    total = grounded_total + rejected_total
    rate = rejected_total / total if total else 0.0
    print(
        f"grounded {grounded_total}/{total} snippets; hallucination rate {rate:.3f}",
        file=sys.stderr,
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fp:
            json.dump(
                {"documents": reports, "grounded": grounded_total, "rejected": rejected_total,
                 "hallucination_rate": rate},
                fp, indent=2, ensure_ascii=False,
            )
        print(f"wrote grounding report to {args.report}", file=sys.stderr)
    return 0


def cmd_redact(args) -> int:
    docs = corpus_io.read_documents(args.docs)
    annotations = _single_source_set(args.gold, docs, "gold")
    policy = RedactionPolicy.from_file(args.policy) if args.policy else RedactionPolicy()
    audit = []
    failures = 0
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for doc_id in sorted(docs):
            doc = docs[doc_id]
            spans = annotations.for_doc(doc_id)
            result = redact(doc, spans, policy)
            ok, violations = verify_redaction(result, spans, doc, policy, strict=args.strict)
            if not ok:
                failures += 1
                for violation in violations:
                    print(f"{doc_id}: {violation}", file=sys.stderr)
            out.write(
                json.dumps(
                    {"doc_id": doc_id, "text": result.text, "policy_fingerprint": result.policy_fingerprint},
                    ensure_ascii=False,
                )
                + "\n"
            )
            payload = result.to_payload()
            payload.pop("text")
            payload["verified"] = ok
            audit.append(payload)
    finally:
        if args.output:
            out.close()
    if args.audit:
        with open(args.audit, "w", encoding="utf-8") as fp:
            json.dump({"policy_fingerprint": policy.fingerprint(), "documents": audit}, fp, indent=2)
        print(f"wrote audit report to {args.audit}", file=sys.stderr)
    return 1 if failures else 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig.load(args.config)
    serve(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipikit",
        description="Annotate, measure, tag, ground and redact indirect personal identifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="per-category annotation counts and proportions")
    p.add_argument("annotations")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="deterministic train/dev/test split")
    p.add_argument("docs")
    p.add_argument("--ratios", default="0.6,0.15,0.25")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("bio", help="CoNLL-style BIO export with sectioning")
    p.add_argument("docs")
    p.add_argument("annotations")
    p.add_argument("--max-tokens", type=int, default=512)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bio)

    p = sub.add_parser("iaa", help="inter-annotator agreement (average pairwise relaxed F1)")
    p.add_argument("annotations_a")
    p.add_argument("annotations_b")
    p.add_argument("--docs", required=True)
    p.add_argument("--mode", choices=("token", "char"), default="token")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_iaa)

    p = sub.add_parser("eval", help="score predictions against gold spans")
    p.add_argument("gold")
    p.add_argument("predictions")
    p.add_argument("--schema", choices=SCHEMAS, default="type")
    p.add_argument("--mode", choices=("char", "token"), default="char")
    p.add_argument("--docs")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tag", help="run the rule-based baseline tagger")
    p.add_argument("docs")
    p.add_argument("--rules")
    p.add_argument("--source", default="rule-tagger")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("ground", help="ground free-text extractions to source spans")
    p.add_argument("docs")
    p.add_argument("extractions")
    p.add_argument("--max-edit-distance", type=int, default=None)
    p.add_argument("--source", default="grounded")
    p.add_argument("--report")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("redact", help="apply a redaction policy to curated spans")
    p.add_argument("docs")
    p.add_argument("gold")
    p.add_argument("--policy")
    p.add_argument("--strict", action="store_true")
    p.add_argument("-o", "--output")
    p.add_argument("--audit")
    p.set_defaults(func=cmd_redact)

    p = sub.add_parser("serve", help="run the review service")
    p.add_argument("--config")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(f"{exc.filename}: file not found")
    except IpiError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
