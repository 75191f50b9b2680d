"""Wire-format tests for the http backend against a local mock endpoint."""

from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from focuschain.backend import BackendConfig, ImagePart, ModelRequest, TextPart, make_backend
from focuschain.core import image_ref_for_file
from focuschain.errors import AuthenticationError, TransportError

from helpers import write_image_store


class _MockCompletions(BaseHTTPRequestHandler):
    requests_seen: list[dict] = []
    behavior = "ok"  # ok | flaky | auth

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = json.loads(self.rfile.read(length).decode("utf-8"))
        type(self).requests_seen.append(
            {"path": self.path, "auth": self.headers.get("Authorization"), "body": body}
        )
        behavior = type(self).behavior
        if behavior == "auth":
            self._respond(401, {"error": "bad key"})
            return
        if behavior == "flaky" and len(type(self).requests_seen) == 1:
            self._respond(503, {"error": "warming up"})
            return
        self._respond(
            200,
            {
                "choices": [{"message": {"role": "assistant", "content": "mock reply"}}],
                "usage": {"total_tokens": 5},
            },
        )

    def _respond(self, status, payload):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def mock_endpoint():
    handler = type("Handler", (_MockCompletions,), {"requests_seen": [], "behavior": "ok"})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", handler
    server.shutdown()


def test_openai_compatible_body_and_route(mock_endpoint, tmp_path, monkeypatch):
    base, handler = mock_endpoint
    monkeypatch.setenv("TEST_BACKEND_KEY", "sekrit")
    images = write_image_store(tmp_path, count=1)
    ref = image_ref_for_file(images[0], tmp_path)
    config = BackendConfig(
        kind="http",
        endpoint=base,
        model="base-model",
        role_models=(("extract", "vision-model"),),
        api_key_env="TEST_BACKEND_KEY",
        image_root=str(tmp_path),
        max_attempts=1,
    )
    backend = make_backend(config)
    request = ModelRequest(
        role_tag="extract", parts=(TextPart("describe"), ImagePart(ref)), max_tokens=77
    )
    response = backend.complete(request)
    assert response.text == "mock reply"
    assert response.usage == {"total_tokens": 5}

    seen = handler.requests_seen[0]
    assert seen["path"] == "/v1/chat/completions"
    assert seen["auth"] == "Bearer sekrit"
    body = seen["body"]
    assert body["model"] == "vision-model"  # role override applies
    assert body["temperature"] == 0.0
    assert body["max_tokens"] == 77
    content = body["messages"][0]["content"]
    assert content[0] == {"type": "text", "text": "describe"}
    url = content[1]["image_url"]["url"]
    prefix = "data:image/png;base64,"
    assert url.startswith(prefix)
    assert base64.b64decode(url[len(prefix):]) == images[0].read_bytes()


def test_5xx_retried_until_success(mock_endpoint):
    base, handler = mock_endpoint
    handler.behavior = "flaky"
    config = BackendConfig(kind="http", endpoint=base, model="m", max_attempts=3, backoff_ms=1)
    backend = make_backend(config)
    response = backend.complete(ModelRequest(role_tag="connect", parts=(TextPart("x"),)))
    assert response.text == "mock reply"
    assert len(handler.requests_seen) == 2


def test_auth_failure_not_retried(mock_endpoint):
    base, handler = mock_endpoint
    handler.behavior = "auth"
    config = BackendConfig(kind="http", endpoint=base, model="m", max_attempts=3, backoff_ms=1)
    backend = make_backend(config)
    with pytest.raises(AuthenticationError):
        backend.complete(ModelRequest(role_tag="connect", parts=(TextPart("x"),)))
    assert len(handler.requests_seen) == 1


def test_image_part_without_root_rejected(mock_endpoint):
    base, _ = mock_endpoint
    config = BackendConfig(kind="http", endpoint=base, model="m", max_attempts=1)
    backend = make_backend(config)
    from helpers import make_ref

    request = ModelRequest(role_tag="extract", parts=(TextPart("x"), ImagePart(make_ref())))
    from focuschain.errors import ValidationError

    with pytest.raises(ValidationError, match="image_root"):
        backend.complete(request)
