"""Uniform chat interface over completion backends.

Two backends: an OpenAI-compatible HTTP client for live runs and a
deterministic scripted backend for tests. Both take a model spec and a
role-tagged transcript and return the assistant text.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from urllib.parse import urlparse

import requests

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

DEFAULT_MAX_IN_FLIGHT = 4


class TranscriptError(ValueError):
    """Transcript violates the role invariants."""


class GatewayError(RuntimeError):
    """Base for backend failures; `kind` tags the failure for run logs."""

    kind = "backend"


class GatewayTimeoutError(GatewayError):
    kind = "timeout"


class TransportError(GatewayError):
    kind = "transport"


class BackendError(GatewayError):
    kind = "backend"


class ScriptExhaustedError(GatewayError):
    kind = "script_exhausted"


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in (ROLE_SYSTEM, ROLE_USER, ROLE_ASSISTANT):
            raise TranscriptError(f"unknown role {self.role!r}")
        if self.role in (ROLE_SYSTEM, ROLE_USER) and not self.content:
            raise TranscriptError(f"{self.role} message must have content")


@dataclass
class ChatTranscript:
    messages: list[ChatMessage] = field(default_factory=list)

    def validate(self) -> None:
        if not self.messages:
            raise TranscriptError("transcript is empty")
        if self.messages[0].role != ROLE_SYSTEM:
            raise TranscriptError("first message must be the system role")
        expected = ROLE_USER
        for msg in self.messages[1:]:
            if msg.role != expected:
                raise TranscriptError(
                    f"expected {expected} message, found {msg.role}"
                )
            expected = ROLE_ASSISTANT if expected == ROLE_USER else ROLE_USER

    def append_user(self, content: str) -> None:
        self.messages.append(ChatMessage(ROLE_USER, content))

    def append_assistant(self, content: str) -> None:
        self.messages.append(ChatMessage(ROLE_ASSISTANT, content))

    def as_payload(self) -> list[dict[str, str]]:
        return [{"role": m.role, "content": m.content} for m in self.messages]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    parameter_count: int = 0
    endpoint: str = ""
    temperature: float = 0.0
    seed: int | None = 0
    max_output_tokens: int = 2048
    request_timeout: float = 120.0

    def __post_init__(self) -> None:
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.endpoint:
            parsed = urlparse(self.endpoint)
            if parsed.scheme not in ("http", "https") or not parsed.netloc:
                raise ValueError(f"malformed endpoint URL: {self.endpoint!r}")


def _check_ready(transcript: ChatTranscript) -> None:
    transcript.validate()
    if transcript.messages[-1].role == ROLE_ASSISTANT:
        raise TranscriptError("last message must be user or system")


class ScriptedBackend:
    """Replays a fixed list of assistant replies; the k-th call returns
    script[k]. Deterministic, so runs built on it are bit-reproducible."""

    deterministic = True

    def __init__(self, script: Sequence[str]):
        if not script:
            raise ValueError("scripted backend needs a non-empty script")
        self._script = list(script)
        self._cursor = 0
        self._lock = threading.Lock()

    def complete(self, spec: ModelSpec, transcript: ChatTranscript) -> str:
        _check_ready(transcript)
        with self._lock:
            if self._cursor >= len(self._script):
                raise ScriptExhaustedError(
                    f"script exhausted after {len(self._script)} replies"
                )
            reply = self._script[self._cursor]
            self._cursor += 1
        return reply.rstrip()


class HttpBackend:
    """OpenAI-compatible chat-completions client.

    Retries once on pure transport failures, never on model-level errors.
    Every request/response pair is appended to the audit log before the
    reply is returned.
    """

    deterministic = False

    def __init__(
        self,
        api_key: str | None = None,
        extra_headers: dict[str, str] | None = None,
        audit_path: str | Path | None = None,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        session: requests.Session | None = None,
    ):
        self._api_key = api_key
        self._extra_headers = dict(extra_headers or {})
        self._audit_path = Path(audit_path) if audit_path else None
        self._semaphore = threading.BoundedSemaphore(max_in_flight)
        self._session = session or requests.Session()
        self._audit_lock = threading.Lock()

    def complete(self, spec: ModelSpec, transcript: ChatTranscript) -> str:
        _check_ready(transcript)
        url = self._completions_url(spec.endpoint)
        payload: dict = {
            "model": spec.name,
            "messages": transcript.as_payload(),
            "temperature": spec.temperature,
            "max_tokens": spec.max_output_tokens,
        }
        if spec.seed is not None:
            payload["seed"] = spec.seed
        headers = {"Content-Type": "application/json", **self._extra_headers}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"

        start = time.perf_counter()
        try:
            body = self._post(url, payload, headers, spec.request_timeout)
            content = self._content_of(body)
        except GatewayError as exc:
            self._audit(url, spec, payload, error=f"{exc.kind}: {exc}", start=start)
            raise
        self._audit(url, spec, payload, response=content, start=start)
        return content.rstrip()

    def _post(self, url: str, payload: dict, headers: dict, timeout: float) -> dict:
        last_transport: Exception | None = None
        for attempt in range(2):  # one retry, transport failures only
            try:
                response = self._semaphore_post(url, payload, headers, timeout)
            except requests.Timeout as exc:
                raise GatewayTimeoutError(str(exc)) from exc
            except requests.ConnectionError as exc:
                last_transport = exc
                continue
            except requests.RequestException as exc:
                raise TransportError(str(exc)) from exc
            if response.status_code != 200:
                raise BackendError(
                    f"HTTP {response.status_code}: {response.text[:500]}"
                )
            try:
                return response.json()
            except ValueError as exc:
                raise BackendError(f"non-JSON response: {exc}") from exc
        raise TransportError(str(last_transport))

    def _semaphore_post(
        self, url: str, payload: dict, headers: dict, timeout: float
    ) -> requests.Response:
        with self._semaphore:
            return self._session.post(url, json=payload, headers=headers, timeout=timeout)

    @staticmethod
    def _content_of(body: dict) -> str:
        if "error" in body:
            raise BackendError(f"backend error payload: {body['error']}")
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"unexpected response shape: {exc}") from exc
        if content is None:
            raise BackendError("completion content is null")
        return content

    @staticmethod
    def _completions_url(endpoint: str) -> str:
        if not endpoint:
            raise BackendError("model spec has no endpoint configured")
        if endpoint.rstrip("/").endswith("/chat/completions"):
            return endpoint
        return endpoint.rstrip("/") + "/chat/completions"

    def _audit(
        self,
        url: str,
        spec: ModelSpec,
        payload: dict,
        response: str | None = None,
        error: str | None = None,
        start: float = 0.0,
    ) -> None:
        if self._audit_path is None:
            return
        entry = {
            "ts": time.time(),
            "duration_ms": int((time.perf_counter() - start) * 1000),
            "url": url,
            "model": spec.name,
            "request": payload,
            "response": response,
            "error": error,
        }
        line = json.dumps(entry, ensure_ascii=False) + "\n"
        with self._audit_lock:
            self._audit_path.parent.mkdir(parents=True, exist_ok=True)
            with self._audit_path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
