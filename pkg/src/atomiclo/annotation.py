"""Expert tagging backend: question browsing, LO search, label/notes writes
with optimistic revisions, and ground-truth export.

State is a single JSON snapshot per store, rewritten via atomic rename on
every accepted write, so a crash never leaves a half-written store and a
restart reloads exactly what was acknowledged. One serialized writer per
store; the HTTP layer may serve many concurrent requests.

Revisions: every question carries a monotonically increasing revision.
Writes must present the revision they last saw; a mismatch is rejected with
the current state so the client can reconcile (single-annotator optimistic
locking, no auth).
"""
from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional, Union
from urllib.parse import parse_qs, urlparse

from .corpus import ChapterMismatch, Corpus, Question, UNLABELED, UnknownLOCode, load_corpus
from .taxonomy import InvalidCodeFormat, Taxonomy, load_taxonomy, parse_lo_code


class AnnotationError(Exception):
    pass


class NotFound(AnnotationError):
    pass


class RevisionConflict(AnnotationError):
    def __init__(self, message: str, state: "AnnotationState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class AnnotationState:
    selected: tuple[str, ...]
    notes: str
    revision: int
    modified: str

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "notes": self.notes,
            "revision": self.revision,
            "modified": self.modified,
        }


@dataclass(frozen=True)
class ExportBundle:
    """A labeled corpus file assembled from store state + question bank."""

    content: str
    unlabeled_ids: tuple[str, ...]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class AnnotationStore:
    """On-disk snapshot of per-question annotation state."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._states: dict[str, AnnotationState] = {}
        if self.path.exists():
            raw = json.loads(self.path.read_text(encoding="utf-8"))
            for qid, entry in raw.get("states", {}).items():
                self._states[qid] = AnnotationState(
                    selected=tuple(entry["selected"]),
                    notes=entry["notes"],
                    revision=entry["revision"],
                    modified=entry["modified"],
                )

    def get(self, qid: str) -> Optional[AnnotationState]:
        with self._lock:
            return self._states.get(qid)

    def snapshot(self) -> dict[str, AnnotationState]:
        with self._lock:
            return dict(self._states)

    def compare_and_set(
        self, qid: str, expected_revision: int, current: AnnotationState, new: AnnotationState
    ) -> AnnotationState:
        """Atomically replace a question's state; persists before returning."""
        with self._lock:
            stored = self._states.get(qid, current)
            if stored.revision != expected_revision:
                raise RevisionConflict(
                    f"revision {expected_revision} is stale (current {stored.revision})", stored
                )
            self._states[qid] = new
            self._flush_locked()
            return new

    def _flush_locked(self) -> None:
        payload = {
            "version": 1,
            "states": {qid: state.to_dict() for qid, state in sorted(self._states.items())},
        }
        text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
            os.replace(tmp, self.path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


class AnnotationService:
    """Business layer shared by the HTTP API and in-process callers."""

    def __init__(self, taxonomy: Taxonomy, corpus: Corpus, store: AnnotationStore):
        self.taxonomy = taxonomy
        self.corpus = corpus
        self.store = store

    def _question(self, qid: str) -> Question:
        question = self.corpus.get(qid)
        if question is None:
            raise NotFound(f"no question with id {qid!r}")
        return question

    def state_of(self, qid: str) -> AnnotationState:
        """Stored state, or the question's shipped labels/notes at revision 0."""
        stored = self.store.get(qid)
        if stored is not None:
            return stored
        question = self._question(qid)
        return AnnotationState(
            selected=tuple(c.render() for c in question.ground_truth),
            notes=question.notes,
            revision=0,
            modified="",
        )

    def list_questions(
        self,
        chapter: Optional[str] = None,
        dataset: Optional[str] = None,
        labeled: Optional[bool] = None,
    ) -> list[dict]:
        summaries = []
        for question in self.corpus:
            state = self.state_of(question.id)
            if chapter is not None and question.chapter != chapter:
                continue
            if dataset is not None and question.dataset != dataset:
                continue
            if labeled is not None and bool(state.selected) != labeled:
                continue
            summaries.append(
                {
                    "id": question.id,
                    "chapter": question.chapter,
                    "source": question.source,
                    "dataset": question.dataset,
                    "label_count": len(state.selected),
                    "labeled": bool(state.selected),
                    "revision": state.revision,
                }
            )
        return summaries

    def get_question(self, qid: str) -> dict:
        question = self._question(qid)
        state = self.state_of(qid)
        subset = self.taxonomy.subset_by_chapter(question.chapter)
        return {
            "question": question.to_dict(),
            "state": state.to_dict(),
            "subset": [lo.to_dict() for lo in subset],
        }

    def search_los(
        self,
        query: str = "",
        chapter: Optional[str] = None,
        category: Optional[str] = None,
        action: Optional[str] = None,
    ) -> list[dict]:
        results = self.taxonomy.search(
            query=query, chapter=chapter, category=category or None, action=action or None
        )
        return [lo.to_dict() for lo in results]

    def _validated_codes(self, question: Question, codes: list) -> tuple[str, ...]:
        cleaned: list[str] = []
        seen: set[str] = set()
        for raw in codes:
            code = parse_lo_code(raw)
            lo = self.taxonomy.get(code)
            if lo is None:
                raise UnknownLOCode(f"code {code} not in taxonomy")
            if lo.chapter != question.chapter:
                raise ChapterMismatch(
                    f"code {code} belongs to chapter {lo.chapter!r}, "
                    f"question {question.id!r} is in {question.chapter!r}"
                )
            if code.render() not in seen:
                seen.add(code.render())
                cleaned.append(code.render())
        return tuple(cleaned)

    def put_labels(self, qid: str, codes: list, expected_revision: int) -> AnnotationState:
        question = self._question(qid)
        cleaned = self._validated_codes(question, codes)
        current = self.state_of(qid)
        new = AnnotationState(
            selected=cleaned,
            notes=current.notes,
            revision=expected_revision + 1,
            modified=_now(),
        )
        return self.store.compare_and_set(qid, expected_revision, current, new)

    def put_notes(self, qid: str, text: str, expected_revision: int) -> AnnotationState:
        self._question(qid)
        if not isinstance(text, str):
            raise AnnotationError("notes must be a string")
        current = self.state_of(qid)
        new = AnnotationState(
            selected=current.selected,
            notes=text,
            revision=expected_revision + 1,
            modified=_now(),
        )
        return self.store.compare_and_set(qid, expected_revision, current, new)

    def export_ground_truth(self) -> ExportBundle:
        """Labeled corpus JSONL in corpus order; unlabeled questions exported
        with an empty ground truth and flagged in the bundle."""
        lines = []
        unlabeled = []
        for question in self.corpus:
            state = self.state_of(question.id)
            row = question.to_dict()
            row["ground_truth"] = list(state.selected)
            row["notes"] = state.notes
            lines.append(json.dumps(row, ensure_ascii=False))
            if not state.selected:
                unlabeled.append(question.id)
        content = "".join(line + "\n" for line in lines)
        return ExportBundle(content=content, unlabeled_ids=tuple(unlabeled))


_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>Annotation service</title></head>
<body><h1>Annotation service is running</h1>
<p>No UI assets found. Build the frontend and pass its output directory via
<code>--static-dir</code>, or use the JSON API under <code>/api/</code>.</p>
</body></html>
"""

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}

_LABELS_RE = re.compile(r"^/api/questions/([^/]+)/labels$")
_NOTES_RE = re.compile(r"^/api/questions/([^/]+)/notes$")
_QUESTION_RE = re.compile(r"^/api/questions/([^/]+)$")


def make_handler(service: AnnotationService, static_dir: Optional[Path] = None):
    class Handler(BaseHTTPRequestHandler):
        # quiet by default; tests and the CLI don't want per-request stderr noise
        def log_message(self, format, *args):
            pass

        def _send_json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, status: int, error: str, **extra) -> None:
            self._send_json(status, {"error": error, **extra})

        def _read_json_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return {}
            return json.loads(raw.decode("utf-8"))

        def do_GET(self):
            parsed = urlparse(self.path)
            route = parsed.path
            query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
            try:
                if route == "/api/questions":
                    labeled = query.get("labeled")
                    self._send_json(
                        200,
                        {
                            "questions": service.list_questions(
                                chapter=query.get("chapter"),
                                dataset=query.get("dataset"),
                                labeled=None if labeled is None else labeled == "true",
                            )
                        },
                    )
                    return
                match = _QUESTION_RE.match(route)
                if match:
                    self._send_json(200, service.get_question(match.group(1)))
                    return
                if route == "/api/los":
                    self._send_json(
                        200,
                        {
                            "results": service.search_los(
                                query=query.get("query", ""),
                                chapter=query.get("chapter"),
                                category=query.get("category"),
                                action=query.get("action"),
                            )
                        },
                    )
                    return
                if route == "/api/export":
                    bundle = service.export_ground_truth()
                    body = bundle.content.encode("utf-8")
                    self.send_response(200)
                    self.send_header("Content-Type", "application/x-ndjson; charset=utf-8")
                    self.send_header("Content-Length", str(len(body)))
                    self.send_header("X-Unlabeled-Count", str(len(bundle.unlabeled_ids)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
                if not route.startswith("/api/"):
                    self._serve_static(route)
                    return
                self._send_error_json(404, "unknown route")
            except NotFound as exc:
                self._send_error_json(404, "not_found", message=str(exc))
            except (InvalidCodeFormat, UnknownLOCode, ChapterMismatch, ValueError) as exc:
                self._send_error_json(400, "bad_request", message=str(exc))

        def do_PUT(self):
            parsed = urlparse(self.path)
            route = parsed.path
            try:
                body = self._read_json_body()
                match = _LABELS_RE.match(route)
                if match:
                    state = service.put_labels(
                        match.group(1),
                        body.get("codes", []),
                        int(body.get("expected_revision", -1)),
                    )
                    self._send_json(200, {"state": state.to_dict()})
                    return
                match = _NOTES_RE.match(route)
                if match:
                    state = service.put_notes(
                        match.group(1),
                        body.get("text", ""),
                        int(body.get("expected_revision", -1)),
                    )
                    self._send_json(200, {"state": state.to_dict()})
                    return
                self._send_error_json(404, "unknown route")
            except NotFound as exc:
                self._send_error_json(404, "not_found", message=str(exc))
            except RevisionConflict as exc:
                self._send_json(
                    409,
                    {"error": "revision_conflict", "message": str(exc), "state": exc.state.to_dict()},
                )
            except (InvalidCodeFormat, UnknownLOCode, ChapterMismatch, AnnotationError) as exc:
                self._send_error_json(400, "bad_request", message=str(exc))
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                self._send_error_json(400, "bad_request", message=str(exc))

        def _serve_static(self, route: str) -> None:
            if static_dir is None:
                if route in ("/", "/index.html"):
                    body = _FALLBACK_PAGE.encode("utf-8")
                    self.send_response(200)
                    self.send_header("Content-Type", "text/html; charset=utf-8")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
                self._send_error_json(404, "not_found")
                return
            relative = route.lstrip("/") or "index.html"
            target = (static_dir / relative).resolve()
            root = static_dir.resolve()
            if root not in target.parents and target != root:
                self._send_error_json(404, "not_found")
                return
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                # single-page app: unknown paths fall back to the index
                target = root / "index.html"
                if not target.is_file():
                    self._send_error_json(404, "not_found")
                    return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


def make_server(
    taxonomy_path: Union[str, Path],
    corpus_path: Union[str, Path],
    store_path: Union[str, Path],
    port: int = 8777,
    static_dir: Optional[Union[str, Path]] = None,
    host: str = "127.0.0.1",
) -> ThreadingHTTPServer:
    taxonomy = load_taxonomy(taxonomy_path)
    corpus = load_corpus(corpus_path, taxonomy, mode=UNLABELED)
    service = AnnotationService(taxonomy, corpus, AnnotationStore(store_path))
    handler = make_handler(service, Path(static_dir) if static_dir else None)
    return ThreadingHTTPServer((host, port), handler)
