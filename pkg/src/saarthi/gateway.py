"""Chat-completion gateway with an HTTP backend (OpenAI-compatible wire
format) and deterministic scripted / record-replay backends for tests and
offline runs."""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

RETRY_BACKOFF_SECONDS = (1.0, 2.0, 4.0)
CHARS_PER_TOKEN_ESTIMATE = 4


class GatewayError(RuntimeError):
    """Base class for gateway failures."""

    retryable = False


class AuthError(GatewayError):
    """4xx auth-class failure; never retried."""


class TransientError(GatewayError):
    retryable = True


class ProtocolError(GatewayError):
    """The server replied with something that is not a chat completion."""


class ContextOverflowError(GatewayError):
    """Request exceeds the configured context budget; failed fast without a call."""


class CacheMissError(GatewayError):
    """Replay backend has no entry for the request digest."""

    def __init__(self, digest: str):
        super().__init__(f"cassette miss for request digest {digest}")
        self.digest = digest


class ScriptExhaustedError(GatewayError):
    """Scripted backend ran out of queued replies."""


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.2
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message role must be system or user")

    @staticmethod
    def build(
        model_id: str,
        messages: list[tuple[str, str]] | list[ChatMessage],
        temperature: float = 0.2,
        max_tokens: int = 2048,
    ) -> "ChatRequest":
        norm = tuple(
            m if isinstance(m, ChatMessage) else ChatMessage(role=m[0], content=m[1])
            for m in messages
        )
        return ChatRequest(model_id=model_id, messages=norm, temperature=temperature, max_tokens=max_tokens)


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"  # stop | length | error
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def to_json(self) -> dict:
        return {
            "content": self.content,
            "finish_reason": self.finish_reason,
            "usage": {
                "prompt_tokens": self.prompt_tokens,
                "completion_tokens": self.completion_tokens,
            },
        }

    @staticmethod
    def from_json(payload: dict) -> "ChatResponse":
        usage = payload.get("usage", {})
        return ChatResponse(
            content=payload["content"],
            finish_reason=payload.get("finish_reason", "stop"),
            prompt_tokens=usage.get("prompt_tokens", 0),
            completion_tokens=usage.get("completion_tokens", 0),
        )


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def canonical_digest(request: ChatRequest) -> str:
    """Stable hash of a request: whitespace-normalized content, fixed field
    order. Equal requests hash equal across processes and platforms."""
    canonical = {
        "model": request.model_id,
        "temperature": format(request.temperature, ".6g"),
        "max_tokens": request.max_tokens,
        "messages": [
            {"role": m.role, "content": _normalize_ws(m.content)} for m in request.messages
        ],
    }
    encoded = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def estimate_tokens(request: ChatRequest) -> int:
    return sum(len(m.content) // CHARS_PER_TOKEN_ESTIMATE + 4 for m in request.messages)


class Backend(Protocol):
    context_budget: int | None

    def send(self, request: ChatRequest) -> ChatResponse: ...


def complete(backend: Backend, request: ChatRequest) -> ChatResponse:
    """Run one chat completion through the given backend, enforcing the
    backend's context budget before any call is made."""
    budget = getattr(backend, "context_budget", None)
    if budget is not None and estimate_tokens(request) > budget:
        raise ContextOverflowError(
            f"context overflow: estimated {estimate_tokens(request)} tokens exceeds budget {budget}"
        )
    return backend.send(request)


@dataclass
class ScriptedBackend:
    """Deterministic queue of reply contents, consumed in order.

    Single-consumer: callers must not share one instance across threads.
    """

    replies: list[str]
    context_budget: int | None = None
    calls: int = 0

    def send(self, request: ChatRequest) -> ChatResponse:
        if self.calls >= len(self.replies):
            raise ScriptExhaustedError(
                f"scripted backend exhausted after {len(self.replies)} replies"
            )
        content = self.replies[self.calls]
        self.calls += 1
        return ChatResponse(
            content=content,
            finish_reason="stop",
            prompt_tokens=estimate_tokens(request),
            completion_tokens=len(content) // CHARS_PER_TOKEN_ESTIMATE,
        )


@dataclass
class CassetteBackend:
    """Record/replay cache keyed by the canonical request digest.

    In replay mode a missing digest raises CacheMissError. In record mode
    requests are forwarded to ``inner`` and the responses persisted, so a
    later replay run reproduces them bit-for-bit offline.
    """

    path: Path
    mode: str = "replay"  # replay | record
    inner: Backend | None = None
    context_budget: int | None = None
    _entries: dict[str, ChatResponse] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.path = Path(self.path)
        if self.mode not in ("replay", "record"):
            raise ValueError(f"unknown cassette mode: {self.mode}")
        if self.mode == "record" and self.inner is None:
            raise ValueError("record mode requires an inner backend")
        if self.path.exists():
            raw = json.loads(self.path.read_text())
            for entry in raw:
                self._entries[entry["request_digest"]] = ChatResponse.from_json(entry["response"])

    def send(self, request: ChatRequest) -> ChatResponse:
        digest = canonical_digest(request)
        if digest in self._entries:
            return self._entries[digest]
        if self.mode == "replay":
            raise CacheMissError(digest)
        assert self.inner is not None
        response = self.inner.send(request)
        self._entries[digest] = response
        self._save()
        return response

    def _save(self) -> None:
        payload = [
            {"request_digest": digest, "response": response.to_json()}
            for digest, response in sorted(self._entries.items())
        ]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(payload, indent=2))


@dataclass
class HttpBackend:
    """OpenAI-compatible chat-completions client.

    Transient failures (timeouts, 5xx, 429) are retried up to 3 times with
    exponential backoff (1s, 2s, 4s). Auth failures are never retried.
    """

    base_url: str
    api_key: str = ""
    timeout: float = 60.0
    context_budget: int | None = None
    sleep: Callable[[float], None] = time.sleep

    @staticmethod
    def from_env(base_url: str | None = None) -> "HttpBackend":
        return HttpBackend(
            base_url=base_url or os.environ.get("SAARTHI_BASE_URL", "https://api.openai.com"),
            api_key=os.environ.get("SAARTHI_API_KEY", ""),
        )

    def send(self, request: ChatRequest) -> ChatResponse:
        last_error: GatewayError | None = None
        for attempt in range(len(RETRY_BACKOFF_SECONDS) + 1):
            if attempt > 0:
                self.sleep(RETRY_BACKOFF_SECONDS[attempt - 1])
            try:
                return self._send_once(request)
            except GatewayError as exc:
                if not exc.retryable:
                    raise
                last_error = exc
        assert last_error is not None
        raise last_error

    def _send_once(self, request: ChatRequest) -> ChatResponse:
        url = self.base_url.rstrip("/") + "/v1/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": request.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            reply = httpx.post(url, json=body, headers=headers, timeout=self.timeout)
        except httpx.TimeoutException as exc:
            raise TransientError(f"request timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransientError(f"transport failure: {exc}") from exc

        if reply.status_code in (401, 403):
            raise AuthError(f"authentication failed (HTTP {reply.status_code})")
        if reply.status_code == 429 or reply.status_code >= 500:
            raise TransientError(f"server not ready (HTTP {reply.status_code})")
        if reply.status_code != 200:
            raise ProtocolError(f"unexpected HTTP status {reply.status_code}: {reply.text[:200]}")

        try:
            payload = reply.json()
            choice = payload["choices"][0]
            content = choice["message"]["content"]
            finish_reason = choice.get("finish_reason", "stop")
            usage = payload.get("usage", {})
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed chat completion reply: {exc}") from exc
        return ChatResponse(
            content=content,
            finish_reason=finish_reason if finish_reason in ("stop", "length") else "error",
            prompt_tokens=usage.get("prompt_tokens", 0),
            completion_tokens=usage.get("completion_tokens", 0),
        )
