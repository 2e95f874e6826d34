"""Chat-completion gateway with caching, retries and a scriptable mock.

Requests are addressed by a digest of (model, messages, temperature) so
identical requests hit the response cache instead of the backend. The
cache file is append-only JSONL; the first record for a digest wins.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import requests
import yaml

from .errors import ConfigError, DataError, GatewayError, RequestError, TransportError
from .jsonl import append_jsonl, read_jsonl

logger = logging.getLogger(__name__)

ROLES = ("system", "user")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int | None = None

    def __post_init__(self):
        if not self.model:
            raise ValueError("model must be non-empty")
        if not self.messages:
            raise ValueError("at least one message is required")
        for role, _ in self.messages:
            if role not in ROLES:
                raise ValueError(f"message role must be one of {ROLES}, got {role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def user_content(self) -> str:
        return "\n".join(content for role, content in self.messages if role == "user")


def user_request(model: str, prompt: str, temperature: float = 0.0) -> ChatRequest:
    return ChatRequest(model=model, messages=(("user", prompt),), temperature=temperature)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    model: str
    usage: tuple[int, int] = (0, 0)


def request_digest(request: ChatRequest) -> str:
    payload = {
        "model": request.model,
        "messages": [[role, content] for role, content in request.messages],
        "temperature": request.temperature,
    }
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ResponseCache:
    """Digest-keyed response store backed by an append-only JSONL file."""

    def __init__(self, path: str | Path | None = None):
        self._path = None if path is None else Path(path)
        self._entries: dict[str, ChatResponse] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            for line_no, obj in read_jsonl(self._path):
                if not isinstance(obj, dict) or "digest" not in obj or "text" not in obj:
                    raise DataError(f"{self._path}: line {line_no}: bad cache record")
                digest = str(obj["digest"])
                if digest in self._entries:
                    continue
                usage = obj.get("usage", [0, 0])
                self._entries[digest] = ChatResponse(
                    text=str(obj["text"]),
                    model=str(obj.get("model", "")),
                    usage=(int(usage[0]), int(usage[1])),
                )

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, digest: str) -> ChatResponse | None:
        with self._lock:
            return self._entries.get(digest)

    def put(self, digest: str, response: ChatResponse) -> None:
        with self._lock:
            if digest in self._entries:
                return
            self._entries[digest] = response
            if self._path is not None:
                append_jsonl(
                    self._path,
                    {
                        "digest": digest,
                        "text": response.text,
                        "model": response.model,
                        "usage": list(response.usage),
                    },
                )


class _HTTPStatusError(Exception):
    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}")
        self.status = status
        self.body = body


class HttpBackend:
    """Single-attempt OpenAI-style chat completion call over HTTP."""

    def __init__(self, endpoint: str, api_key_env: str = "OPENAI_API_KEY", timeout: float = 60.0):
        if "://" not in endpoint:
            raise ConfigError(f"gateway endpoint {endpoint!r} is not a URL")
        if "/chat/completions" not in endpoint:
            endpoint = endpoint.rstrip("/") + "/v1/chat/completions"
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout = timeout

    def send(self, request: ChatRequest) -> ChatResponse:
        payload: dict = {
            "model": request.model,
            "messages": [{"role": role, "content": content} for role, content in request.messages],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        reply = requests.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        if reply.status_code != 200:
            raise _HTTPStatusError(reply.status_code, reply.text)
        try:
            body = reply.json()
            text = body["choices"][0]["message"]["content"]
            usage = body.get("usage", {})
            counts = (int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)))
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"malformed completion response: {exc}") from exc
        return ChatResponse(text=str(text), model=str(body.get("model", request.model)), usage=counts)


@dataclass
class MockBackend:
    """Deterministic scripted backend for tests and offline runs.

    Rules are (substring, response) pairs checked in declaration order
    against the request's user content; the first hit wins.
    """

    rules: list[tuple[str, str]]
    default: str | None = None
    calls: int = 0
    seen: list[ChatRequest] = field(default_factory=list)

    def send(self, request: ChatRequest) -> ChatResponse:
        self.calls += 1
        self.seen.append(request)
        content = request.user_content()
        for needle, response in self.rules:
            if needle in content:
                return ChatResponse(text=response, model=request.model)
        if self.default is not None:
            return ChatResponse(text=self.default, model=request.model)
        raise GatewayError(f"mock backend has no rule matching request: {content[:200]!r}")


def load_mock_script(path: str | Path) -> MockBackend:
    """Load a mock script: {rules: [{contains, response}, ...], default: str?}."""
    try:
        raw = yaml.safe_load(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read mock script {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"mock script {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("rules"), list):
        raise ConfigError(f"mock script {path} must be a mapping with a 'rules' list")
    rules: list[tuple[str, str]] = []
    for i, rule in enumerate(raw["rules"]):
        if not isinstance(rule, dict) or "contains" not in rule or "response" not in rule:
            raise ConfigError(f"mock script {path}: rule {i} needs 'contains' and 'response'")
        rules.append((str(rule["contains"]), str(rule["response"])))
    default = raw.get("default")
    return MockBackend(rules=rules, default=None if default is None else str(default))


class Gateway:
    """Caching, retrying front door for a chat-completion backend.

    retry_limit counts retries after the first attempt. Retryable
    failures are network errors, HTTP 429 and HTTP 5xx; other 4xx raise
    RequestError immediately.
    """

    def __init__(
        self,
        backend,
        cache: ResponseCache | None = None,
        retry_limit: int = 3,
        backoff_base: float = 0.5,
        max_in_flight: int = 4,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")
        if retry_limit < 0:
            raise ConfigError("retry_limit must be >= 0")
        self.backend = backend
        self.cache = cache if cache is not None else ResponseCache()
        self.retry_limit = retry_limit
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._semaphore = threading.Semaphore(max_in_flight)

    def complete(self, request: ChatRequest, skip_cache: bool = False) -> ChatResponse:
        """Resolve one request, preferring the cache.

        skip_cache bypasses the cache read (used to force a fresh
        completion); the response is still recorded if the digest is new.
        """
        digest = request_digest(request)
        if not skip_cache:
            cached = self.cache.get(digest)
            if cached is not None:
                return cached
        last_error: Exception | None = None
        for attempt in range(self.retry_limit + 1):
            if attempt > 0:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    response = self.backend.send(request)
                self.cache.put(digest, response)
                return response
            except _HTTPStatusError as exc:
                if exc.status == 429 or exc.status >= 500:
                    last_error = exc
                    logger.warning("gateway got HTTP %d, attempt %d/%d", exc.status, attempt + 1, self.retry_limit + 1)
                    continue
                raise RequestError(exc.status, exc.body) from exc
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("gateway transport failure (%s), attempt %d/%d", exc, attempt + 1, self.retry_limit + 1)
                continue
        raise TransportError(f"gateway failed after {self.retry_limit + 1} attempts: {last_error}")

    def complete_many(self, requests_batch: Sequence[ChatRequest]) -> list[ChatResponse]:
        """Resolve several requests, preserving order."""
        return [self.complete(req) for req in requests_batch]
