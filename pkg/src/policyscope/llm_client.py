"""Chat-completion transport for OpenAI-compatible endpoints, plus scripted and
replay clients that serve canned responses without a network."""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import httpx

from .errors import PolicyscopeError, ValidationError

API_KEY_ENV = "POLICYSCOPE_API_KEY"
BASE_URL_ENV = "POLICYSCOPE_BASE_URL"
DEFAULT_MODEL = "llama-3.3-70b-instruct"
RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})
EXCERPT_CHARS = 200


class LLMClientError(PolicyscopeError):
    pass


class TransportError(LLMClientError):
    def __init__(self, message, status=None, retries=0):
        super().__init__(message)
        self.status = status
        self.retries = retries


class AuthError(TransportError):
    pass


class ProtocolError(LLMClientError):
    pass


class ScriptExhaustedError(LLMClientError):
    pass


@dataclass(frozen=True)
class ClientConfig:
    base_url: str
    model: str = DEFAULT_MODEL
    temperature: float = 0.7
    max_tokens: int = 1024
    timeout_seconds: float = 60.0
    max_retries: int = 3
    api_key: str | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.base_url:
            raise ValidationError("base_url must be nonempty")
        if self.temperature < 0:
            raise ValidationError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_retries < 0:
            raise ValidationError(f"max_retries must be >= 0, got {self.max_retries}")

    @classmethod
    def from_env(cls, base_url: str | None = None, **overrides) -> "ClientConfig":
        """Explicit ``base_url`` beats the environment; the key only ever comes from it."""
        url = base_url or os.environ.get(BASE_URL_ENV, "")
        return cls(base_url=url, api_key=os.environ.get(API_KEY_ENV) or None, **overrides)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float | None = None
    max_tokens: int | None = None

    def __post_init__(self):
        msgs = tuple(self.messages)
        if not msgs:
            raise ValidationError("a chat request needs at least one message")
        if msgs[0].role != "system":
            raise ValidationError("the first message must have role 'system'")
        bad = [m.role for m in msgs if m.role not in ("system", "user")]
        if bad:
            raise ValidationError(f"unsupported message roles {bad}")
        object.__setattr__(self, "messages", msgs)

    @classmethod
    def of(cls, system: str, user: str, **kw) -> "ChatRequest":
        return cls((ChatMessage("system", system), ChatMessage("user", user)), **kw)


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str | None = None
    usage: dict | None = None
    retries: int = 0


def request_body(cfg: ClientConfig, req: ChatRequest) -> dict:
    return {
        "model": cfg.model,
        "messages": [{"role": m.role, "content": m.content} for m in req.messages],
        "temperature": cfg.temperature if req.temperature is None else req.temperature,
        "max_tokens": cfg.max_tokens if req.max_tokens is None else req.max_tokens,
    }


def backoff_delays(retries: int, rng: random.Random | None = None) -> list[float]:
    """Exponential delays 1, 2, 4, ... seconds with +/-20% jitter, never decreasing."""
    rng = rng or random.Random()
    out = []
    for i in range(retries):
        d = 2.0**i * rng.uniform(0.8, 1.2)
        out.append(max(d, out[-1]) if out else d)
    return out


def _redact(text: str, secret: str | None) -> str:
    if secret:
        text = text.replace(secret, "***")
    return text


def _excerpt(body: str, secret: str | None) -> str:
    body = _redact(body, secret)
    return body if len(body) <= EXCERPT_CHARS else body[:EXCERPT_CHARS] + "..."


def _parse_body(resp: httpx.Response, cfg: ClientConfig, retries: int) -> ChatResponse:
    try:
        data = resp.json()
        choice = data["choices"][0]
        content = choice["message"]["content"]
        if not isinstance(content, str):
            raise TypeError("content is not a string")
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(
            f"malformed chat-completion response ({type(exc).__name__}): {_excerpt(resp.text, cfg.api_key)!r}"
        ) from None
    return ChatResponse(content, choice.get("finish_reason"), data.get("usage"), retries)


def complete(
    cfg: ClientConfig,
    req: ChatRequest,
    *,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> ChatResponse:
    """POST one chat completion, retrying transport failures, 429 and 5xx."""
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"
    body = request_body(cfg, req)
    delays = backoff_delays(cfg.max_retries, rng)
    last = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            sleep(delays[attempt - 1])
        try:
            resp = httpx.post(url, json=body, headers=headers, timeout=cfg.timeout_seconds)
        except httpx.TransportError as exc:
            last = (None, f"{type(exc).__name__}: {_redact(str(exc), cfg.api_key)}")
            continue
        if resp.status_code in RETRYABLE_STATUS:
            last = (resp.status_code, _excerpt(resp.text, cfg.api_key))
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})", resp.status_code, attempt)
        if resp.status_code >= 400:
            raise TransportError(
                f"HTTP {resp.status_code}: {_excerpt(resp.text, cfg.api_key)}", resp.status_code, attempt
            )
        return _parse_body(resp, cfg, attempt)
    status, detail = last
    raise TransportError(
        f"request failed after {cfg.max_retries} retries (last status {status}): {detail}", status, cfg.max_retries
    )


class HttpChatClient:
    def __init__(self, cfg: ClientConfig, sleep: Callable[[float], None] = time.sleep):
        self.cfg = cfg
        self._sleep = sleep

    def __repr__(self):
        return f"HttpChatClient(base_url={self.cfg.base_url!r}, model={self.cfg.model!r})"

    def complete(self, req: ChatRequest) -> ChatResponse:
        return complete(self.cfg, req, sleep=self._sleep)


class MockClient:
    """Serves a fixed script of responses in order and records every request."""

    def __init__(self, script: Sequence[str]):
        self.script = list(script)
        self.requests: list[ChatRequest] = []

    @classmethod
    def from_transcript(cls, path) -> "MockClient":
        from .transcript import read_transcript

        return cls([t.response for t in read_transcript(path).transcripts])

    def complete(self, req: ChatRequest) -> ChatResponse:
        if len(self.requests) >= len(self.script):
            raise ScriptExhaustedError(f"mock script exhausted after {len(self.script)} responses")
        self.requests.append(req)
        return ChatResponse(self.script[len(self.requests) - 1], "stop")


def mock_client(script: Sequence[str] | None = None, replay: str | os.PathLike | None = None) -> MockClient:
    if replay is not None:
        return MockClient.from_transcript(replay)
    if not script:
        raise ValidationError("mock_client needs a nonempty script or a replay file")
    return MockClient(script)

