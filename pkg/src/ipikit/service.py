"""HTTP review service: corpus, annotations, adjudication and reports.

State lives in an append-only JSONL event log under the data directory,
with a periodic snapshot as a fast-start optimization. Replaying the
same log always reproduces the same state, so the gold export is a
deterministic fold. Writes are optimistic: every document carries a
monotone version counter and decisions must name the version they were
based on.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .agreement import pairwise_relaxed_f1
from .model import (
    AnnotationSet,
    Category,
    DataError,
    Document,
    IpiError,
    SpanAnnotation,
    merge_same_category,
)

DECISION_KINDS = ("ACCEPT_A", "ACCEPT_B", "MERGED", "REJECT_BOTH")

SNAPSHOT_EVERY = 100


class VersionConflict(IpiError):
    """A write was based on a stale document version."""


class UnknownDocument(IpiError):
    pass


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    data_dir: str = "review-data"
    token: Optional[str] = None
    ui_origin: Optional[str] = None
    annotators: "tuple[str, str]" = ("annotator-a", "annotator-b")
    documents: Optional[str] = None  # JSONL corpus loaded at startup

    @classmethod
    def load(cls, path: Optional[str] = None, env: Optional[dict] = None) -> "ServiceConfig":
        """Read the JSON config file, then apply IPIKIT_* environment overrides."""
        env = os.environ if env is None else env
        payload = {}
        if path:
            with open(path, encoding="utf-8") as fp:
                payload = json.load(fp)
        config = cls(
            host=payload.get("host", cls.host),
            port=int(payload.get("port", cls.port)),
            data_dir=payload.get("data_dir", cls.data_dir),
            token=payload.get("token"),
            ui_origin=payload.get("ui_origin"),
            annotators=tuple(payload.get("annotators", cls.annotators)),
            documents=payload.get("documents"),
        )
        if "IPIKIT_HOST" in env:
            config.host = env["IPIKIT_HOST"]
        if "IPIKIT_PORT" in env:
            config.port = int(env["IPIKIT_PORT"])
        if "IPIKIT_DATA_DIR" in env:
            config.data_dir = env["IPIKIT_DATA_DIR"]
        if "IPIKIT_TOKEN" in env:
            config.token = env["IPIKIT_TOKEN"]
        if "IPIKIT_UI_ORIGIN" in env:
            config.ui_origin = env["IPIKIT_UI_ORIGIN"]
        if "IPIKIT_DOCUMENTS" in env:
            config.documents = env["IPIKIT_DOCUMENTS"]
        if len(config.annotators) != 2:
            raise DataError("config must name exactly two annotators")
        return config


class ReviewStore:
    """Documents, annotations and decisions with durable, replayable state."""

    def __init__(self, data_dir: str, annotators: "tuple[str, str]" = ("annotator-a", "annotator-b")):
        self.data_dir = data_dir
        self.annotators = annotators
        self.documents: "dict[str, Document]" = {}
        self.annotations: "dict[str, list[dict]]" = {}
        self.decisions: "dict[str, list[dict]]" = {}
        self.versions: "dict[str, int]" = {}
        self._lock = threading.Lock()
        self._doc_locks: "dict[str, threading.Lock]" = {}
        self._events_since_snapshot = 0
        os.makedirs(data_dir, exist_ok=True)
        self._log_path = os.path.join(data_dir, "events.jsonl")
        self._snapshot_path = os.path.join(data_dir, "snapshot.json")
        self._replay()

    # -- persistence --------------------------------------------------------

    def _replay(self) -> None:
        offset = 0
        if os.path.exists(self._snapshot_path):
            with open(self._snapshot_path, encoding="utf-8") as fp:
                snap = json.load(fp)
            for record in snap["documents"]:
                self.documents[record["doc_id"]] = Document(record["doc_id"], record["text"])
            self.annotations = {k: list(v) for k, v in snap["annotations"].items()}
            self.decisions = {k: list(v) for k, v in snap["decisions"].items()}
            self.versions = dict(snap["versions"])
            offset = int(snap.get("log_offset", 0))
        if os.path.exists(self._log_path):
            with open(self._log_path, encoding="utf-8") as fp:
                fp.seek(offset)
                for line in fp:
                    if line.strip():
                        self._apply(json.loads(line))

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "document":
            self.documents[event["doc_id"]] = Document(event["doc_id"], event["text"])
            self.versions.setdefault(event["doc_id"], 0)
        elif kind == "annotation":
            record = {k: event[k] for k in ("doc_id", "start", "end", "label", "source", "version")}
            self.annotations.setdefault(event["doc_id"], []).append(record)
            self.versions[event["doc_id"]] = max(self.versions.get(event["doc_id"], 0), event["version"])
        elif kind == "decision":
            record = {
                k: event[k]
                for k in ("doc_id", "start", "end", "kind", "adjudicator", "basis_version", "merged", "version")
            }
            self.decisions.setdefault(event["doc_id"], []).append(record)
            self.versions[event["doc_id"]] = max(self.versions.get(event["doc_id"], 0), event["version"])
        else:
            raise DataError(f"unknown event type {kind!r} in log")

    def _append(self, event: dict) -> None:
        with open(self._log_path, "a", encoding="utf-8") as fp:
            fp.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
            fp.flush()
            os.fsync(fp.fileno())
        self._events_since_snapshot += 1
        if self._events_since_snapshot >= SNAPSHOT_EVERY:
            self.snapshot()

    def snapshot(self) -> None:
        state = {
            "documents": [{"doc_id": d.doc_id, "text": d.text} for d in self.documents.values()],
            "annotations": self.annotations,
            "decisions": self.decisions,
            "versions": self.versions,
            "log_offset": os.path.getsize(self._log_path) if os.path.exists(self._log_path) else 0,
        }
        tmp = self._snapshot_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fp:
            json.dump(state, fp, ensure_ascii=False)
        os.replace(tmp, self._snapshot_path)
        self._events_since_snapshot = 0

    def _doc_lock(self, doc_id: str) -> threading.Lock:
        with self._lock:
            return self._doc_locks.setdefault(doc_id, threading.Lock())

    # -- writes --------------------------------------------------------------

    def add_document(self, doc: Document) -> None:
        with self._doc_lock(doc.doc_id):
            if doc.doc_id in self.documents:
                if self.documents[doc.doc_id].text != doc.text:
                    raise DataError(f"document {doc.doc_id!r} already loaded with different text")
                return
            event = {"event": "document", "doc_id": doc.doc_id, "text": doc.text}
            self._append(event)
            self._apply(event)

    def load_documents(self, docs: "dict[str, Document]") -> None:
        for doc_id in sorted(docs):
            self.add_document(docs[doc_id])

    def add_annotation(self, doc_id: str, start: int, end: int, label: str, source: str) -> dict:
        doc = self._require_doc(doc_id)
        category = Category.parse(label)
        span = SpanAnnotation(doc_id, start, end, category, source=source)
        span.check_against(doc)  # bounds; snippet left empty on purpose
        with self._doc_lock(doc_id):
            version = self.versions.get(doc_id, 0) + 1
            event = {
                "event": "annotation",
                "doc_id": doc_id,
                "start": start,
                "end": end,
                "label": category.name,
                "source": source,
                "version": version,
            }
            self._append(event)
            self._apply(event)
        record = dict(event)
        record.pop("event")
        record["snippet"] = doc.text[start:end]
        return record

    def add_decision(
        self,
        doc_id: str,
        start: int,
        end: int,
        kind: str,
        adjudicator: str,
        basis_version: int,
        merged: Optional[dict] = None,
    ) -> dict:
        doc = self._require_doc(doc_id)
        if kind not in DECISION_KINDS:
            raise DataError(f"unknown decision kind {kind!r} (expected one of {', '.join(DECISION_KINDS)})")
        if not (0 <= start < end <= len(doc.text)):
            raise DataError(f"decision region ({start}, {end}) out of bounds for doc {doc_id!r}")
        if kind == "MERGED":
            if not merged:
                raise DataError("MERGED decision requires a merged span")
            category = Category.parse(merged["label"])
            merged_span = SpanAnnotation(doc_id, int(merged["start"]), int(merged["end"]), category)
            merged_span.check_against(doc)
            merged = {"start": merged_span.start, "end": merged_span.end, "label": category.name}
        else:
            merged = None
        with self._doc_lock(doc_id):
            current = self.versions.get(doc_id, 0)
            if basis_version != current:
                raise VersionConflict(
                    f"doc {doc_id!r} is at version {current}, decision was based on {basis_version}"
                )
            event = {
                "event": "decision",
                "doc_id": doc_id,
                "start": start,
                "end": end,
                "kind": kind,
                "adjudicator": adjudicator,
                "basis_version": basis_version,
                "merged": merged,
                "version": current + 1,
            }
            self._append(event)
            self._apply(event)
        record = dict(event)
        record.pop("event")
        return record

    # -- reads ---------------------------------------------------------------

    def _require_doc(self, doc_id: str) -> Document:
        try:
            return self.documents[doc_id]
        except KeyError:
            raise UnknownDocument(doc_id) from None

    def doc_summaries(self) -> "list[dict]":
        out = []
        for doc_id in sorted(self.documents):
            counts: "dict[str, int]" = {}
            for record in self.annotations.get(doc_id, []):
                counts[record["source"]] = counts.get(record["source"], 0) + 1
            out.append(
                {
                    "doc_id": doc_id,
                    "version": self.versions.get(doc_id, 0),
                    "annotations": counts,
                    "decisions": len(self.decisions.get(doc_id, [])),
                }
            )
        return out

    def doc_detail(self, doc_id: str) -> dict:
        doc = self._require_doc(doc_id)
        by_source: "dict[str, list[dict]]" = {}
        for record in self.annotations.get(doc_id, []):
            by_source.setdefault(record["source"], []).append(dict(record))
        return {
            "doc_id": doc_id,
            "text": doc.text,
            "version": self.versions.get(doc_id, 0),
            "annotations": by_source,
            "decisions": [dict(d) for d in self.decisions.get(doc_id, [])],
        }

    def annotation_set(self, source: str) -> AnnotationSet:
        spans = []
        for doc_id, records in self.annotations.items():
            text = self.documents[doc_id].text
            for record in records:
                if record["source"] != source:
                    continue
                spans.append(
                    SpanAnnotation(
                        doc_id, record["start"], record["end"], Category.parse(record["label"]),
                        text[record["start"]:record["end"]], source, record["version"],
                    )
                )
        return AnnotationSet.from_spans(source, spans)

    # -- gold fold -----------------------------------------------------------

    def export_gold(self) -> dict:
        """Deterministic fold of annotations + decision log into gold spans.

        Exact agreements between the two annotators go straight to gold.
        Every other span joins an overlap cluster (a disagreement
        region); the last decision overlapping a cluster resolves it,
        clusters without a decision are excluded and listed.
        """
        source_a, source_b = self.annotators
        set_a = self.annotation_set(source_a)
        set_b = self.annotation_set(source_b)
        gold: "list[SpanAnnotation]" = []
        undecided: "list[dict]" = []

        for doc_id in sorted(self.documents):
            doc = self.documents[doc_id]
            spans_a = set_a.for_doc(doc_id)
            spans_b = set_b.for_doc(doc_id)
            keys_a = {s.key for s in spans_a}
            keys_b = {s.key for s in spans_b}
            agreed = keys_a & keys_b
            chosen = [s for s in spans_a if s.key in agreed]
            leftovers = [s for s in spans_a + spans_b if s.key not in agreed]
            leftovers.sort(key=lambda s: (s.start, s.end, s.category.name, s.source))

            clusters: "list[dict]" = []
            for span in leftovers:
                if clusters and span.start < clusters[-1]["end"]:
                    clusters[-1]["end"] = max(clusters[-1]["end"], span.end)
                    clusters[-1]["spans"].append(span)
                else:
                    clusters.append({"start": span.start, "end": span.end, "spans": [span]})

            for cluster in clusters:
                decision = None
                for record in self.decisions.get(doc_id, []):
                    if max(record["start"], cluster["start"]) < min(record["end"], cluster["end"]):
                        decision = record  # log order: the last one wins
                if decision is None:
                    undecided.append(
                        {
                            "doc_id": doc_id,
                            "start": cluster["start"],
                            "end": cluster["end"],
                            "spans": [
                                {"start": s.start, "end": s.end, "label": s.category.name, "source": s.source}
                                for s in cluster["spans"]
                            ],
                        }
                    )
                elif decision["kind"] == "ACCEPT_A":
                    chosen.extend(s for s in cluster["spans"] if s.source == source_a)
                elif decision["kind"] == "ACCEPT_B":
                    chosen.extend(s for s in cluster["spans"] if s.source == source_b)
                elif decision["kind"] == "MERGED":
                    merged = decision["merged"]
                    category = Category.parse(merged["label"])
                    chosen.append(
                        SpanAnnotation(
                            doc_id, merged["start"], merged["end"], category,
                            doc.text[merged["start"]:merged["end"]], "gold",
                        )
                    )
                # REJECT_BOTH adds nothing

            for span in merge_same_category(chosen) if chosen else []:
                gold.append(
                    SpanAnnotation(doc_id, span.start, span.end, span.category, span.snippet, "gold")
                )

        return {
            "source": "gold",
            "annotations": [
                {
                    "doc_id": s.doc_id,
                    "start": s.start,
                    "end": s.end,
                    "label": s.category.name,
                    "source": "gold",
                    "snippet": s.snippet,
                }
                for s in gold
            ],
            "undecided": undecided,
        }

    def iaa_report(self, mode: str = "token") -> dict:
        source_a, source_b = self.annotators
        report = pairwise_relaxed_f1(
            self.annotation_set(source_a), self.annotation_set(source_b), self.documents, mode
        )
        return report.to_payload()


class AnnotationIn(BaseModel):
    start: int
    end: int
    label: str
    source: str


class MergedSpanIn(BaseModel):
    start: int
    end: int
    label: str


class DecisionIn(BaseModel):
    start: int
    end: int
    kind: str
    adjudicator: str
    basis_version: int
    merged: Optional[MergedSpanIn] = None


def _field_error(message: str, loc: str = "body") -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": [{"loc": [loc], "msg": message}]})


def create_app(store: ReviewStore, config: ServiceConfig) -> FastAPI:
    # The interactive API browser is disabled: this service's own GET
    # /docs route is the document listing.
    app = FastAPI(title="ipikit review service", docs_url=None, redoc_url=None)

    if config.ui_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.ui_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def require_token(request: Request):
        if not config.token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")


    @app.get("/docs", dependencies=[Depends(require_token)])
    def list_docs():
        return store.doc_summaries()

    @app.get("/docs/{doc_id}", dependencies=[Depends(require_token)])
    def get_doc(doc_id: str):
        try:
            return store.doc_detail(doc_id)
        except UnknownDocument:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")

    @app.post("/docs/{doc_id}/annotations", status_code=201, dependencies=[Depends(require_token)])
    def post_annotation(doc_id: str, body: AnnotationIn):
        try:
            return store.add_annotation(doc_id, body.start, body.end, body.label, body.source)
        except UnknownDocument:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        except DataError as exc:
            return _field_error(str(exc))

    @app.post("/docs/{doc_id}/decisions", status_code=201, dependencies=[Depends(require_token)])
    def post_decision(doc_id: str, body: DecisionIn):
        try:
            merged = body.merged.model_dump() if body.merged else None
            return store.add_decision(
                doc_id, body.start, body.end, body.kind, body.adjudicator, body.basis_version, merged
            )
        except UnknownDocument:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        except VersionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except DataError as exc:
            return _field_error(str(exc))

    @app.get("/export/gold", dependencies=[Depends(require_token)])
    def export_gold():
        return store.export_gold()

    @app.get("/reports/iaa", dependencies=[Depends(require_token)])
    def report_iaa(mode: str = "token"):
        if mode not in ("token", "char"):
            return _field_error("mode must be token or char", loc="query")
        return store.iaa_report(mode)

    return app


def serve(config: ServiceConfig) -> None:
    """Run the review service with uvicorn (blocking)."""
    import uvicorn

    from .corpus import read_documents

    store = ReviewStore(config.data_dir, config.annotators)
    if config.documents:
        store.load_documents(read_documents(config.documents))
    app = create_app(store, config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
