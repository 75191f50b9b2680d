"""HTTP review service for the human quality protocol.

Serves review items and images to the annotator UI, accepts judgments into an
append-only store, and exposes the live agreement report. Built on the
stdlib threading HTTP server: every judgment write goes through the store's
single serialized writer, reads are snapshots, and restarting the service on
the same log reproduces the identical report.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .core import resolve_image, sniff_mime
from .errors import MissingImageError, ValidationError
from .baseline_page import FALLBACK_PAGE
from .quality import JudgmentStore, agreement_report, effective_judgments
from .question import SynthesisRecord

_CONTENT_ID_RE = re.compile(r"^[0-9a-f]{64}$")

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


class ReviewState:
    """Review set, judgment store, and image index behind the endpoints."""

    def __init__(
        self,
        review_set: list[SynthesisRecord],
        store: JudgmentStore,
        image_root: str | Path | None = None,
        n_raters: int = 3,
        static_dir: str | Path | None = None,
    ):
        if n_raters < 2:
            raise ValidationError("review protocol needs at least 2 raters")
        self.review_set = list(review_set)
        self.by_id = {record.id: record for record in self.review_set}
        self.store = store
        self.image_root = Path(image_root) if image_root is not None else None
        self.n_raters = n_raters
        self.static_dir = Path(static_dir) if static_dir is not None else None
        self.images = {}
        for record in self.review_set:
            for ref in record.images:
                self.images.setdefault(ref.id, ref)

    def judged_ids(self, annotator: str) -> set[str]:
        return {
            record_id
            for (record_id, annotator_id) in effective_judgments(self.store.all())
            if annotator_id == annotator
        }

    def next_item(self, annotator: str) -> dict:
        done = self.judged_ids(annotator)
        for index, record in enumerate(self.review_set):
            if record.id not in done:
                return {
                    "index": index,
                    "total": len(self.review_set),
                    "judged": len(done),
                    "record": record.to_json(),
                    "image_urls": [f"/api/images/{ref.id}" for ref in record.images],
                }
        return {"done": True, "judged": len(done), "total": len(self.review_set)}

    def progress(self) -> dict:
        counts: dict[str, int] = {}
        for (_, annotator_id) in effective_judgments(self.store.all()):
            counts[annotator_id] = counts.get(annotator_id, 0) + 1
        return {"total": len(self.review_set), "annotators": dict(sorted(counts.items()))}

    def agreement(self) -> dict:
        review_ids = [record.id for record in self.review_set]
        try:
            return agreement_report(self.store.all(), review_ids, self.n_raters).to_json()
        except ValidationError:
            return {
                "n_items": 0,
                "n_raters": self.n_raters,
                "validity_rate": None,
                "kappa": None,
                "correct_count_histogram": {},
                "incomplete": len(self.review_set),
            }


class _Handler(BaseHTTPRequestHandler):
    state: ReviewState  # assigned by build_server

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_bytes(self, status: int, data: bytes, content_type: str, cache: bool = False) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        if cache:
            self.send_header("Cache-Control", "public, max-age=31536000, immutable")
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):  # noqa: N802 - stdlib naming
        url = urlparse(self.path)
        if url.path == "/api/items":
            query = parse_qs(url.query)
            annotator = (query.get("annotator") or [""])[0].strip()
            if not annotator:
                self._send_json(400, {"error": "missing annotator parameter"})
                return
            if not self.state.review_set:
                self._send_json(404, {"error": "no review set loaded"})
                return
            self._send_json(200, self.state.next_item(annotator))
        elif url.path == "/api/agreement":
            self._send_json(200, self.state.agreement())
        elif url.path == "/api/progress":
            self._send_json(200, self.state.progress())
        elif url.path.startswith("/api/images/"):
            self._serve_image(url.path[len("/api/images/") :])
        elif url.path.startswith("/api/"):
            self._send_json(404, {"error": f"unknown endpoint {url.path}"})
        else:
            self._serve_static(url.path)

    def _serve_image(self, content_id: str) -> None:
        if not _CONTENT_ID_RE.fullmatch(content_id):
            self._send_json(400, {"error": "malformed image id"})
            return
        ref = self.state.images.get(content_id)
        if ref is None or self.state.image_root is None:
            self._send_json(404, {"error": "unknown image id"})
            return
        try:
            data = resolve_image(ref, self.state.image_root).read_bytes()
        except MissingImageError:
            self._send_json(404, {"error": "image not found in store"})
            return
        self._send_bytes(200, data, sniff_mime(data), cache=True)

    def _serve_static(self, path: str) -> None:
        if self.state.static_dir is None:
            self._send_bytes(200, FALLBACK_PAGE.encode("utf-8"), "text/html; charset=utf-8")
            return
        name = path.lstrip("/") or "index.html"
        root = self.state.static_dir.resolve()
        candidate = (root / name).resolve()
        if not candidate.is_relative_to(root):
            self._send_json(400, {"error": "bad path"})
            return
        if not candidate.is_file():
            # SPA fallback: unknown non-asset paths get the app shell.
            candidate = root / "index.html"
            if not candidate.is_file():
                self._send_json(404, {"error": "not found"})
                return
        content_type = _STATIC_TYPES.get(candidate.suffix.lower(), "application/octet-stream")
        self._send_bytes(200, candidate.read_bytes(), content_type)

    def do_POST(self):  # noqa: N802 - stdlib naming
        url = urlparse(self.path)
        match = re.fullmatch(r"/api/items/([0-9a-f]{64})/judgment", url.path)
        if not match:
            self._send_json(404, {"error": f"unknown endpoint {url.path}"})
            return
        record_id = match.group(1)
        if record_id not in self.state.by_id:
            self._send_json(404, {"error": f"unknown review item {record_id}"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8") or "{}")
        except json.JSONDecodeError:
            self._send_json(400, {"error": "body is not valid JSON"})
            return
        annotator = payload.get("annotator")
        missing = [
            key
            for key in ("final_answer_ok", "sub_answers_ok", "focus_ok")
            if not isinstance(payload.get(key), bool)
        ]
        if not isinstance(annotator, str) or not annotator.strip():
            missing.insert(0, "annotator")
        if missing:
            self._send_json(422, {"error": f"missing or non-boolean fields: {', '.join(missing)}"})
            return
        judgment = self.state.store.submit(
            record_id=record_id,
            annotator_id=annotator.strip(),
            final_answer_ok=payload["final_answer_ok"],
            sub_answers_ok=payload["sub_answers_ok"],
            focus_ok=payload["focus_ok"],
        )
        self._send_json(200, judgment.to_json())


def build_server(state: ReviewState, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(
        target=server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
    )
    thread.start()
    return thread
