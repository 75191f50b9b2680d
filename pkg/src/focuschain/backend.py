"""Model-call abstraction: a uniform chat-completion contract with two
implementations — an OpenAI-compatible HTTP client and a deterministic
scripted backend for tests and offline runs.

Scripted playlists are keyed by stage tag and consumed in request order, so a
fixed playlist plus a fixed seed pins the whole pipeline. A playlist entry is
either a completion string, ``{"text": ..., "delay_ms": ...}`` for simulated
latency, or ``{"error": ...}`` to raise a transport failure (consumed once per
attempt, which makes retry behaviour observable).
"""

from __future__ import annotations

import base64
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .core import ImageRef, load_image_bytes, sniff_mime
from .errors import (
    AuthenticationError,
    BackendError,
    ParseError,
    ScriptExhaustedError,
    TransportError,
    ValidationError,
)

ROLE_TAGS = ("extract", "connect", "annotate", "question", "chain_plan", "chain_answer", "chain_stop")

# (min, max) image attachments allowed per stage; None means unbounded.
_IMAGE_RULES: dict[str, tuple[int, int | None]] = {
    "extract": (1, 1),
    "connect": (0, 0),
    "annotate": (2, 2),
    "question": (0, 0),
    "chain_plan": (1, None),
    "chain_answer": (1, None),
    "chain_stop": (0, 0),
}

DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 1024


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    image: ImageRef


@dataclass(frozen=True)
class ModelRequest:
    role_tag: str
    parts: tuple[TextPart | ImagePart, ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if self.role_tag not in ROLE_TAGS:
            raise ValidationError(f"unknown role_tag {self.role_tag!r}")
        if not any(isinstance(p, TextPart) for p in self.parts):
            raise ValidationError("request needs at least one text part")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be positive")
        lo, hi = _IMAGE_RULES[self.role_tag]
        n_images = len(self.images())
        if n_images < lo or (hi is not None and n_images > hi):
            bound = f"exactly {lo}" if lo == hi else f"between {lo} and {hi if hi is not None else 'any'}"
            raise ValidationError(f"stage {self.role_tag!r} allows {bound} image parts, got {n_images}")

    def images(self) -> list[ImageRef]:
        return [p.image for p in self.parts if isinstance(p, ImagePart)]

    def text(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))


@dataclass(frozen=True)
class ModelResponse:
    text: str
    usage: dict | None = None
    latency_ms: float = 0.0


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "scripted"
    endpoint: str = ""
    model: str = ""
    role_models: tuple[tuple[str, str], ...] = ()
    api_key_env: str = "OPENAI_API_KEY"
    max_attempts: int = 3
    backoff_ms: float = 250.0
    parallelism: int = 4
    image_root: str | None = None
    playlists: dict | None = None
    playlist_file: str | None = None

    def __post_init__(self):
        if self.kind not in ("http", "scripted"):
            raise ValidationError(f"backend kind must be http or scripted, got {self.kind!r}")
        if self.parallelism < 1:
            raise ValidationError("parallelism must be >= 1")
        if self.max_attempts < 1:
            raise ValidationError("max attempts must be >= 1")
        if self.kind == "http" and not self.endpoint:
            raise ValidationError("http backend requires an endpoint URL")

    @classmethod
    def from_json(cls, data: dict) -> "BackendConfig":
        known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
        kwargs = {k: v for k, v in data.items() if k in known}
        if isinstance(kwargs.get("role_models"), dict):
            kwargs["role_models"] = tuple(sorted(kwargs["role_models"].items()))
        return cls(**kwargs)

    def model_for(self, role_tag: str) -> str:
        return dict(self.role_models).get(role_tag, self.model)


def extract_json(text: str):
    """Return the first balanced top-level JSON object or array inside text.

    Markdown code fences are searched first, then the raw text; prose before
    or after the value is ignored. Raises ParseError when no candidate start
    exists ("no JSON value") or when every candidate fails to parse
    (reported with the byte offset of the first failure).
    """
    decoder = json.JSONDecoder()
    candidates: list[str] = []
    fence_open = 0
    while True:
        fence_open = text.find("```", fence_open)
        if fence_open == -1:
            break
        fence_close = text.find("```", fence_open + 3)
        if fence_close == -1:
            break
        block = text[fence_open + 3 : fence_close]
        # Drop an optional language tag on the opening fence line.
        if "\n" in block:
            first, rest = block.split("\n", 1)
            if first.strip().isalpha() or not first.strip():
                block = rest
        candidates.append(block)
        fence_open = fence_close + 3
    candidates.append(text)

    first_error: json.JSONDecodeError | None = None
    saw_candidate = False
    for chunk in candidates:
        for idx, char in enumerate(chunk):
            if char not in "{[":
                continue
            saw_candidate = True
            try:
                value, _ = decoder.raw_decode(chunk, idx)
                return value
            except json.JSONDecodeError as exc:
                if first_error is None:
                    first_error = exc
    if not saw_candidate:
        raise ParseError("no JSON value found in completion")
    assert first_error is not None
    raise ParseError(f"malformed JSON at offset {first_error.pos}: {first_error.msg}", offset=first_error.pos)


class Backend:
    """Common retry loop and batch fan-out for both backend kinds."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self.calls: list[ModelRequest] = []
        self._calls_lock = threading.Lock()

    def _record(self, request: ModelRequest) -> None:
        with self._calls_lock:
            self.calls.append(request)

    def _attempt(self, request: ModelRequest) -> ModelResponse:
        raise NotImplementedError

    def _retrying(self, request: ModelRequest, attempt_fn) -> ModelResponse:
        last: Exception | None = None
        for attempt in range(self.config.max_attempts):
            try:
                return attempt_fn(request)
            except TransportError as exc:
                last = exc
                if attempt + 1 < self.config.max_attempts:
                    time.sleep(self.config.backoff_ms * (2**attempt) / 1000.0)
        raise TransportError(
            f"request failed after {self.config.max_attempts} attempts: {last}"
        ) from last

    def complete(self, request: ModelRequest) -> ModelResponse:
        return self._retrying(request, self._attempt)

    def run_batch(self, requests: list[ModelRequest]) -> list[ModelResponse | BackendError]:
        """Complete a batch; slot order always equals input order."""
        if not requests:
            raise ValidationError("run_batch() requires a non-empty request list")

        def one(request: ModelRequest) -> ModelResponse | BackendError:
            try:
                return self.complete(request)
            except BackendError as exc:
                return exc

        with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
            return list(pool.map(one, requests))


class ScriptedBackend(Backend):
    """Replays per-stage playlists; records every request it serves."""

    def __init__(self, config: BackendConfig):
        super().__init__(config)
        playlists = config.playlists
        if playlists is None and config.playlist_file:
            playlists = json.loads(Path(config.playlist_file).read_text(encoding="utf-8"))
        self._playlists = {tag: list(entries) for tag, entries in (playlists or {}).items()}
        self._lock = threading.Lock()

    def _take_entry(self, role_tag: str):
        with self._lock:
            playlist = self._playlists.get(role_tag)
            if not playlist:
                raise ScriptExhaustedError(f"no scripted response left for stage {role_tag!r}")
            return playlist.pop(0)

    def _take_response(self, request: ModelRequest) -> ModelResponse:
        """Consume one playlist entry without simulating its latency."""
        self._record(request)
        entry = self._take_entry(request.role_tag)
        delay_ms = 0.0
        if isinstance(entry, dict):
            if "error" in entry:
                raise TransportError(str(entry["error"]))
            delay_ms = float(entry.get("delay_ms", 0.0))
            entry = entry.get("text", "")
        return ModelResponse(text=str(entry), latency_ms=delay_ms)

    def _attempt(self, request: ModelRequest) -> ModelResponse:
        response = self._take_response(request)
        if response.latency_ms:
            time.sleep(response.latency_ms / 1000.0)
        return response

    def run_batch(self, requests: list[ModelRequest]) -> list[ModelResponse | BackendError]:
        """Reserve script entries in input order, then execute concurrently.

        Reservation on the caller's thread keeps playlist consumption
        deterministic under any parallelism; the executor only simulates
        latency, so completion order still varies while slot order stays
        aligned with the input.
        """
        if not requests:
            raise ValidationError("run_batch() requires a non-empty request list")

        drafts: list[ModelResponse | BackendError] = []
        for request in requests:
            try:
                drafts.append(self._retrying(request, self._take_response))
            except BackendError as exc:
                drafts.append(exc)

        def deliver(draft: ModelResponse | BackendError) -> ModelResponse | BackendError:
            if isinstance(draft, ModelResponse) and draft.latency_ms:
                time.sleep(draft.latency_ms / 1000.0)
            return draft

        with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
            return list(pool.map(deliver, drafts))


# One semaphore per endpoint so parallel batches against the same server share
# a single in-flight budget.
_ENDPOINT_GATES: dict[str, threading.Semaphore] = {}
_GATES_LOCK = threading.Lock()


def _endpoint_gate(endpoint: str, parallelism: int) -> threading.Semaphore:
    with _GATES_LOCK:
        if endpoint not in _ENDPOINT_GATES:
            _ENDPOINT_GATES[endpoint] = threading.Semaphore(parallelism)
        return _ENDPOINT_GATES[endpoint]


def _completions_url(endpoint: str) -> str:
    base = endpoint.rstrip("/")
    if base.endswith("/chat/completions"):
        return base
    if base.endswith("/v1"):
        return base + "/chat/completions"
    return base + "/v1/chat/completions"


class HttpBackend(Backend):
    """OpenAI-compatible chat-completions client with bounded retries."""

    def __init__(self, config: BackendConfig):
        super().__init__(config)
        import requests

        self._session = requests.Session()
        self._gate = _endpoint_gate(config.endpoint, config.parallelism)

    def _api_key(self) -> str:
        import os

        return os.environ.get(self.config.api_key_env, "")

    def _encode_parts(self, request: ModelRequest) -> list[dict]:
        content = []
        for part in request.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                if self.config.image_root is None:
                    raise ValidationError("http backend needs image_root to attach images")
                data = load_image_bytes(part.image, self.config.image_root)
                url = f"data:{sniff_mime(data)};base64,{base64.b64encode(data).decode('ascii')}"
                content.append({"type": "image_url", "image_url": {"url": url}})
        return content

    def _attempt(self, request: ModelRequest) -> ModelResponse:
        import requests

        self._record(request)
        body = {
            "model": self.config.model_for(request.role_tag),
            "messages": [{"role": "user", "content": self._encode_parts(request)}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        key = self._api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        started = time.monotonic()
        with self._gate:
            try:
                response = self._session.post(
                    _completions_url(self.config.endpoint), json=body, headers=headers, timeout=120
                )
            except requests.RequestException as exc:
                raise TransportError(str(exc)) from exc
        elapsed = (time.monotonic() - started) * 1000.0
        if response.status_code in (401, 403):
            raise AuthenticationError(f"endpoint rejected credentials (HTTP {response.status_code})")
        if response.status_code >= 500 or response.status_code == 429:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        if response.status_code != 200:
            raise BackendError(f"HTTP {response.status_code}: {response.text[:200]}")
        payload = response.json()
        try:
            text = payload["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"unexpected completion payload: {exc}") from exc
        return ModelResponse(text=text, usage=payload.get("usage"), latency_ms=elapsed)


def make_backend(config: BackendConfig) -> Backend:
    if config.kind == "scripted":
        return ScriptedBackend(config)
    return HttpBackend(config)
