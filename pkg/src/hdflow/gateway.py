"""Uniform access to chat-completion backends.

Two backends are provided: :class:`HttpBackend` talks to any chat-completion
style HTTP endpoint, and :class:`ScriptedBackend` is a deterministic mock that
answers from an ordered script of (matcher, reply) entries. :func:`complete`
wraps either with retry/backoff and request validation; token usage is taken
from the backend when reported and estimated from text length otherwise.
"""

from __future__ import annotations

import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol, Sequence, Union, runtime_checkable

import requests

from .errors import HDFlowError


class GatewayError(HDFlowError):
    pass


class InvalidRequest(GatewayError):
    """The completion request violates its own invariants."""


class AuthMissing(GatewayError):
    """The credential environment variable for an HTTP backend is unset."""


class TransientBackendError(GatewayError):
    """Retryable failure: timeout, connection error, 429/5xx response."""


class BackendError(GatewayError):
    """Non-retryable backend failure (malformed response, rejected request)."""


class BackendUnavailable(GatewayError):
    """Raised once the retry budget is exhausted."""


class NoScriptMatch(GatewayError):
    """No scripted entry matched the incoming request."""


@dataclass(frozen=True)
class TokenUsage:
    """Prompt/completion token counts; ``total`` is always their sum."""

    prompt: int = 0
    completion: int = 0
    total: int = -1  # negative means "compute from the parts"
    estimated: bool = False

    def __post_init__(self) -> None:
        if self.total < 0:
            object.__setattr__(self, "total", self.prompt + self.completion)
        if self.prompt < 0 or self.completion < 0:
            raise ValueError("token counts must be non-negative")
        if self.total != self.prompt + self.completion:
            raise ValueError("total must equal prompt + completion")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return accumulate(self, other)


ZERO_USAGE = TokenUsage(0, 0, 0)


def accumulate(a: TokenUsage, b: TokenUsage) -> TokenUsage:
    """Componentwise sum of two usages (associative and commutative)."""
    return TokenUsage(
        a.prompt + b.prompt,
        a.completion + b.completion,
        a.total + b.total,
        a.estimated or b.estimated,
    )


def sum_usage(usages: Iterable[TokenUsage]) -> TokenUsage:
    total = ZERO_USAGE
    for usage in usages:
        total = accumulate(total, usage)
    return total


def estimate_usage(prompt_text: str, completion_text: str) -> TokenUsage:
    """Char-count estimate (~4 chars per token) used when a backend reports
    no usage; flagged so downstream accounting knows it is approximate."""
    return TokenUsage(
        math.ceil(len(prompt_text) / 4),
        math.ceil(len(completion_text) / 4),
        estimated=True,
    )


ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_new_tokens: int = 2048
    stop: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        object.__setattr__(self, "stop", tuple(self.stop))

    def validate(self) -> None:
        if not self.messages:
            raise InvalidRequest("messages must be non-empty")
        for message in self.messages:
            if message.role not in ROLES:
                raise InvalidRequest(f"unknown role {message.role!r}")
            if message.role != "system" and not message.content:
                raise InvalidRequest(f"{message.role} message content is empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidRequest(f"temperature {self.temperature} outside [0, 2]")
        if self.max_new_tokens < 1:
            raise InvalidRequest("max_new_tokens must be >= 1")

    @property
    def last_user_content(self) -> str:
        for message in reversed(self.messages):
            if message.role == "user":
                return message.content
        return self.messages[-1].content if self.messages else ""

    @property
    def prompt_text(self) -> str:
        return "\n".join(m.content for m in self.messages)


@dataclass(frozen=True)
class CompletionResult:
    text: str
    usage: TokenUsage
    latency_ms: int
    backend_id: str


@runtime_checkable
class Backend(Protocol):
    """A completion backend; ``send`` performs exactly one attempt."""

    backend_id: str

    def send(self, request: CompletionRequest) -> CompletionResult: ...


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff_s: tuple[float, ...] = (0.5, 1.0, 2.0)

    def delay(self, failure_index: int) -> float:
        if not self.backoff_s:
            return 0.0
        return self.backoff_s[min(failure_index, len(self.backoff_s) - 1)]


DEFAULT_RETRY = RetryPolicy()


def complete(
    request: CompletionRequest,
    backend: Backend,
    retry: RetryPolicy = DEFAULT_RETRY,
    sleep: Callable[[float], None] = time.sleep,
) -> CompletionResult:
    """Send a request, retrying transient failures with backoff.

    Non-transient errors (auth, malformed request/response) propagate
    immediately and are never re-issued.
    """
    request.validate()
    last_error: Exception | None = None
    for attempt in range(max(1, retry.attempts)):
        try:
            return backend.send(request)
        except TransientBackendError as exc:
            last_error = exc
            if attempt + 1 < retry.attempts:
                sleep(retry.delay(attempt))
    raise BackendUnavailable(
        f"backend {backend.backend_id!r} failed after {retry.attempts} attempts"
    ) from last_error


Matcher = Union[str, Callable[[str], bool]]


def contains_all(*needles: str) -> Callable[[str], bool]:
    """Matcher accepting messages that contain every given substring."""

    def match(text: str) -> bool:
        return all(needle in text for needle in needles)

    return match


@dataclass
class ScriptEntry:
    matcher: Matcher
    reply: str
    once: bool = False


def _matches(matcher: Matcher, text: str) -> bool:
    if callable(matcher):
        return bool(matcher(text))
    return matcher in text


class ScriptedBackend:
    """Deterministic mock backend answering from an ordered script.

    Each call is matched against the final user message; the first accepting
    entry wins. Entries marked ``once`` are consumed, which supports sequenced
    transcripts where the same matcher must yield different replies over time.
    All requests and results are kept in ``log`` for instrumented assertions.
    """

    def __init__(self, script: Sequence[ScriptEntry | tuple], backend_id: str = "mock"):
        entries = [e if isinstance(e, ScriptEntry) else ScriptEntry(*e) for e in script]
        if not entries:
            raise ValueError("script must be non-empty")
        self._entries = entries
        self.backend_id = backend_id
        self.log: list[tuple[CompletionRequest, CompletionResult]] = []
        self._lock = threading.Lock()

    @property
    def calls(self) -> list[CompletionRequest]:
        return [request for request, _ in self.log]

    def send(self, request: CompletionRequest) -> CompletionResult:
        probe = request.last_user_content
        with self._lock:
            for index, entry in enumerate(self._entries):
                if not _matches(entry.matcher, probe):
                    continue
                if entry.once:
                    del self._entries[index]
                usage = estimate_usage(request.prompt_text, entry.reply)
                result = CompletionResult(entry.reply, usage, 0, self.backend_id)
                self.log.append((request, result))
                return result
        raise NoScriptMatch(f"no scripted reply matches request: {probe[:160]!r}")


def make_scripted_backend(
    script: Sequence[ScriptEntry | tuple], backend_id: str = "mock"
) -> ScriptedBackend:
    return ScriptedBackend(script, backend_id=backend_id)


DEFAULT_API_KEY_ENV = "HDFLOW_API_KEY"


class HttpBackend:
    """Chat-completion HTTP client (OpenAI-compatible request/response JSON).

    The credential is read from an environment variable at call time so a
    long-lived backend object picks up key rotation. Timeouts, connection
    errors, 429 and 5xx responses are classified transient.
    """

    def __init__(
        self,
        base_url: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout_s: float = 120.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self._session = session or requests.Session()
        self.backend_id = f"http:{self.base_url}"

    def send(self, request: CompletionRequest) -> CompletionResult:
        api_key = os.environ.get(self.api_key_env)
        if not api_key:
            raise AuthMissing(f"environment variable {self.api_key_env} is not set")
        body: dict = {
            "model": request.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_new_tokens,
        }
        if request.stop:
            body["stop"] = list(request.stop)
        started = time.monotonic()
        try:
            response = self._session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout_s,
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise TransientBackendError(str(exc)) from exc
        latency_ms = int((time.monotonic() - started) * 1000)
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientBackendError(f"HTTP {response.status_code}: {response.text[:200]}")
        if response.status_code >= 400:
            raise BackendError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed backend response: {exc}") from exc
        usage = self._parse_usage(payload, request, text)
        return CompletionResult(text, usage, latency_ms, self.backend_id)

    @staticmethod
    def _parse_usage(payload: dict, request: CompletionRequest, text: str) -> TokenUsage:
        reported = payload.get("usage")
        if isinstance(reported, dict):
            try:
                prompt = int(reported["prompt_tokens"])
                completion = int(reported["completion_tokens"])
                return TokenUsage(prompt, completion)
            except (KeyError, TypeError, ValueError):
                pass
        return estimate_usage(request.prompt_text, text)
