from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from gkt.domain import BackendKind, BackendSpec
from gkt.backends import MockBackend
from gkt.errors import RemoteUnavailable


def mock_spec(name: str = "mock-model", seed: int = 7, **kw) -> BackendSpec:
    kw.setdefault("vocabulary_size", 32000)
    return BackendSpec(name=name, kind=BackendKind.MOCK, seed=seed, **kw)


class FlakyBackend:
    """Delegates to a mock after failing the first ``failures`` batch calls."""

    is_simulated = True

    def __init__(self, failures: int = 1, **kw):
        self._inner = MockBackend(mock_spec(**kw))
        self._failures = failures
        self.calls = 0
        self.tokenizer = self._inner.tokenizer
        self.name = self._inner.name

    def generate(self, prompt, settings):
        return self._inner.generate(prompt, settings)

    def generate_batch(self, prompts, settings):
        self.calls += 1
        if self.calls <= self._failures:
            raise RemoteUnavailable("backend process died")
        return self._inner.generate_batch(prompts, settings)

    def batch_duration(self, outputs):
        return self._inner.batch_duration(outputs)


class MarkerFailBackend:
    """Raises for any prompt containing the marker; mock otherwise."""

    is_simulated = True

    def __init__(self, marker: str, **kw):
        self._inner = MockBackend(mock_spec(**kw))
        self.marker = marker
        self.tokenizer = self._inner.tokenizer
        self.name = self._inner.name

    def generate(self, prompt, settings):
        if self.marker in prompt:
            raise RemoteUnavailable(f"refusing prompt with {self.marker!r}")
        return self._inner.generate(prompt, settings)

    def generate_batch(self, prompts, settings):
        return [self.generate(p, settings) for p in prompts]

    def batch_duration(self, outputs):
        return self._inner.batch_duration(outputs)


class _StubHandler(BaseHTTPRequestHandler):
    server_version = "stub"

    def log_message(self, *args):  # keep test output clean
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length) or b"{}")
        stub: CompletionsStub = self.server.stub  # type: ignore[attr-defined]
        with stub.lock:
            stub.requests.append({"path": self.path, "body": body, "headers": dict(self.headers)})
            status, payload = stub.next_response()
        encoded = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(encoded)))
        self.end_headers()
        self.wfile.write(encoded)


class CompletionsStub:
    """Local plain-completions endpoint with scripted responses."""

    def __init__(self):
        self.lock = threading.Lock()
        self.requests: list[dict] = []
        self.script: list[tuple[int, dict]] = []
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self._server.stub = self  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def next_response(self) -> tuple[int, dict]:
        if len(self.script) > 1:
            return self.script.pop(0)
        return self.script[0]

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def start(self):
        self._thread.start()
        return self

    def stop(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def completions_stub():
    stub = CompletionsStub().start()
    stub.script = [
        (
            200,
            {
                "choices": [{"text": " The answer is 6.", "finish_reason": "stop"}],
                "usage": {"completion_tokens": 5},
            },
        )
    ]
    yield stub
    stub.stop()
