"""Toolkit for indirect-personal-identifier annotation workflows:
corpus conversion, agreement, evaluation, baseline tagging, grounding,
redaction and a human review service."""

from .model import (
    AnnotationSet,
    CATEGORIES,
    Category,
    DataError,
    Document,
    IpiError,
    PRIORITY,
    SpanAnnotation,
    Token,
    merge_same_category,
    overlaps,
    token_overlap_count,
)
from .corpus import (
    BioSequence,
    CorpusSplit,
    CorpusStats,
    Section,
    SectioningError,
    bio_to_spans,
    corpus_stats,
    read_annotation_sets,
    read_annotations,
    read_documents,
    section_document,
    spans_in_section,
    spans_to_bio,
    split_corpus,
    to_conll,
    tokenize,
)
from .agreement import AgreementReport, pairwise_relaxed_f1, relaxed_match_count
from .evaluation import EvalReport, Outcome, classify_pair, evaluate, render_table
from .tagging import GroundingReport, RuleFileError, RuleSet, ground_extractions, rule_tag
from .redaction import Action, RedactionPolicy, RedactionResult, redact, remap_spans, verify_redaction

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AgreementReport",
    "AnnotationSet",
    "BioSequence",
    "CATEGORIES",
    "Category",
    "CorpusSplit",
    "CorpusStats",
    "DataError",
    "Document",
    "EvalReport",
    "GroundingReport",
    "IpiError",
    "Outcome",
    "PRIORITY",
    "RedactionPolicy",
    "RedactionResult",
    "RuleFileError",
    "RuleSet",
    "Section",
    "SectioningError",
    "SpanAnnotation",
    "Token",
    "bio_to_spans",
    "classify_pair",
    "corpus_stats",
    "evaluate",
    "ground_extractions",
    "merge_same_category",
    "overlaps",
    "pairwise_relaxed_f1",
    "read_annotation_sets",
    "read_annotations",
    "read_documents",
    "redact",
    "relaxed_match_count",
    "remap_spans",
    "render_table",
    "rule_tag",
    "section_document",
    "spans_in_section",
    "spans_to_bio",
    "split_corpus",
    "to_conll",
    "token_overlap_count",
    "tokenize",
    "verify_redaction",
]
