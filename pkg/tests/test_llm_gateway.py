from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from structeci.errors import ConfigError, GatewayError, RequestError, TransportError
from structeci.llm_gateway import (
    ChatRequest,
    ChatResponse,
    Gateway,
    HttpBackend,
    MockBackend,
    ResponseCache,
    load_mock_script,
    request_digest,
    user_request,
)


def test_chat_request_validation():
    with pytest.raises(ValueError):
        ChatRequest(model="m", messages=())
    with pytest.raises(ValueError):
        ChatRequest(model="m", messages=(("assistant", "hi"),))
    with pytest.raises(ValueError):
        ChatRequest(model="", messages=(("user", "hi"),))
    with pytest.raises(ValueError):
        ChatRequest(model="m", messages=(("user", "hi"),), temperature=-1.0)


def test_request_digest_is_stable_and_sensitive():
    a = user_request("m", "prompt")
    assert request_digest(a) == request_digest(user_request("m", "prompt"))
    assert request_digest(a) != request_digest(user_request("m", "other"))
    assert request_digest(a) != request_digest(user_request("m2", "prompt"))
    assert request_digest(a) != request_digest(user_request("m", "prompt", temperature=0.5))


def test_mock_backend_order_default_and_error():
    mock = MockBackend(rules=[("alpha", "A"), ("alp", "B")], default="D")
    assert mock.send(user_request("m", "xx alpha yy")).text == "A"
    assert mock.send(user_request("m", "alp only")).text == "B"
    assert mock.send(user_request("m", "nothing")).text == "D"
    assert mock.calls == 3
    strict = MockBackend(rules=[("alpha", "A")])
    with pytest.raises(GatewayError, match="no rule"):
        strict.send(user_request("m", "nothing"))


def test_load_mock_script(tmp_path):
    path = tmp_path / "script.yaml"
    path.write_text(
        'rules:\n  - contains: "hello"\n    response: "world"\ndefault: "fallback"\n',
        "utf-8",
    )
    mock = load_mock_script(path)
    assert mock.send(user_request("m", "hello there")).text == "world"
    assert mock.send(user_request("m", "zzz")).text == "fallback"
    bad = tmp_path / "bad.yaml"
    bad.write_text("rules: notalist\n", "utf-8")
    with pytest.raises(ConfigError):
        load_mock_script(bad)


def test_cache_first_write_wins_and_persists(tmp_path):
    path = tmp_path / "cache.jsonl"
    cache = ResponseCache(path)
    cache.put("d1", ChatResponse(text="first", model="m"))
    cache.put("d1", ChatResponse(text="second", model="m"))
    assert cache.get("d1").text == "first"
    reloaded = ResponseCache(path)
    assert reloaded.get("d1").text == "first"
    assert len(reloaded) == 1
    # an extra record for the same digest on disk is ignored on load
    with path.open("a", encoding="utf-8") as handle:
        handle.write(json.dumps({"digest": "d1", "text": "third", "model": "m"}) + "\n")
    assert ResponseCache(path).get("d1").text == "first"


def test_gateway_serves_from_cache(tmp_path):
    mock = MockBackend(rules=[], default="R")
    gateway = Gateway(mock, cache=ResponseCache(tmp_path / "c.jsonl"))
    request = user_request("m", "ask")
    first = gateway.complete(request)
    second = gateway.complete(request)
    assert first == second
    assert mock.calls == 1


def test_gateway_skip_cache_forces_backend_call(tmp_path):
    mock = MockBackend(rules=[], default="R")
    cache = ResponseCache(tmp_path / "c.jsonl")
    gateway = Gateway(mock, cache=cache)
    request = user_request("m", "ask")
    gateway.complete(request)
    gateway.complete(request, skip_cache=True)
    assert mock.calls == 2
    # still a single cache record for the digest
    lines = (tmp_path / "c.jsonl").read_text("utf-8").strip().splitlines()
    assert len(lines) == 1


def test_gateway_rerun_via_fresh_cache_instance(tmp_path):
    path = tmp_path / "c.jsonl"
    first = Gateway(MockBackend(rules=[], default="R"), cache=ResponseCache(path))
    first.complete(user_request("m", "ask"))
    mock = MockBackend(rules=[], default="R")
    second = Gateway(mock, cache=ResponseCache(path))
    assert second.complete(user_request("m", "ask")).text == "R"
    assert mock.calls == 0


class _FlakyBackend:
    """Fails with transport errors a fixed number of times, then succeeds."""

    def __init__(self, failures):
        self.failures = failures
        self.calls = 0

    def send(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            import requests

            raise requests.ConnectionError("boom")
        return ChatResponse(text="ok", model=request.model)


def test_gateway_retries_transport_errors():
    backend = _FlakyBackend(failures=2)
    slept = []
    gateway = Gateway(backend, retry_limit=3, backoff_base=0.25, sleep=slept.append)
    assert gateway.complete(user_request("m", "x")).text == "ok"
    assert backend.calls == 3
    assert slept == [0.25, 0.5]


def test_gateway_exhausts_retries():
    backend = _FlakyBackend(failures=10)
    gateway = Gateway(backend, retry_limit=2, backoff_base=0.0, sleep=lambda _:None)
    with pytest.raises(TransportError, match="after 3 attempts"):
        gateway.complete(user_request("m", "x"))
    assert backend.calls == 3


class _ScriptedHandler(BaseHTTPRequestHandler):
    statuses: list[int] = []
    hits: int = 0

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        cls = type(self)
        status = cls.statuses[min(cls.hits, len(cls.statuses) - 1)]
        cls.hits += 1
        if status != 200:
            self.send_response(status)
            self.end_headers()
            self.wfile.write(b"try later")
            return
        body = json.dumps(
            {
                "choices": [{"message": {"role": "assistant", "content": "served"}}],
                "model": "m",
                "usage": {"prompt_tokens": 7, "completion_tokens": 3},
            }
        ).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def scripted_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _ScriptedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    thread.join(timeout=5)


def test_http_backend_retries_429_then_succeeds(scripted_server):
    _ScriptedHandler.statuses = [429, 429, 200]
    _ScriptedHandler.hits = 0
    port = scripted_server.server_address[1]
    backend = HttpBackend(f"http://127.0.0.1:{port}")
    assert backend.endpoint.endswith("/v1/chat/completions")
    gateway = Gateway(backend, retry_limit=3, backoff_base=0.0, sleep=lambda _:None)
    response = gateway.complete(user_request("m", "hello"))
    assert response.text == "served"
    assert response.usage == (7, 3)
    assert _ScriptedHandler.hits == 3


def test_http_backend_500_retried_then_exhausted(scripted_server):
    _ScriptedHandler.statuses = [500]
    _ScriptedHandler.hits = 0
    port = scripted_server.server_address[1]
    gateway = Gateway(
        HttpBackend(f"http://127.0.0.1:{port}"), retry_limit=1, backoff_base=0.0, sleep=lambda _:None
    )
    with pytest.raises(TransportError):
        gateway.complete(user_request("m", "hello"))
    assert _ScriptedHandler.hits == 2


def test_http_backend_404_is_request_error(scripted_server):
    _ScriptedHandler.statuses = [404]
    _ScriptedHandler.hits = 0
    port = scripted_server.server_address[1]
    gateway = Gateway(HttpBackend(f"http://127.0.0.1:{port}"), retry_limit=3, sleep=lambda _:None)
    with pytest.raises(RequestError) as err:
        gateway.complete(user_request("m", "hello"))
    assert err.value.status == 404
    assert "try later" in err.value.body
    assert _ScriptedHandler.hits == 1


def test_http_backend_rejects_non_url():
    with pytest.raises(ConfigError):
        HttpBackend("not-a-url")


def test_gateway_config_validation():
    with pytest.raises(ConfigError):
        Gateway(MockBackend(rules=[]), max_in_flight=0)
    with pytest.raises(ConfigError):
        Gateway(MockBackend(rules=[]), retry_limit=-1)
