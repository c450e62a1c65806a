"""Chat-completion backends behind one interface, plus the call transcript.

Two backends: an HTTP client speaking the common chat-completions wire shape
({model, messages, temperature, max_tokens} -> first choice's message
content), and a scripted backend that serves canned replies in order for
deterministic offline runs. `complete` drives retries with exponential
backoff and appends every call to the transcript, enabling replay.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import BackendError, LlmTimeout, ScriptExhausted, ScriptMismatch


@dataclass
class ChatRequest:
    user: str
    system: str | None = None
    temperature: float = 0.0
    max_tokens: int | None = None
    tag: str = ""

    def __post_init__(self):
        if not self.user:
            raise ValueError("chat request needs non-empty user text")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass
class ChatResponse:
    text: str
    backend: str
    latency: float
    attempt: int


class _Retryable(Exception):
    """Internal marker: transport-level failure worth another attempt."""

    def __init__(self, message: str, timed_out: bool = False):
        super().__init__(message)
        self.timed_out = timed_out


class Backend(Protocol):
    name: str
    max_retries: int
    backoff_base: float

    def send_once(self, req: ChatRequest) -> str: ...


class ScriptedBackend:
    """Ordered (matcher, reply) script; mismatches fail loudly, never silently.

    A matcher is an optional substring the incoming prompt must contain.
    Cursor access is serialized so concurrent calls cannot skip steps.
    """

    name = "scripted"
    max_retries = 0
    backoff_base = 0.0

    def __init__(self, script: list[tuple[str | None, str]]):
        self.script = list(script)
        self.cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def replies(cls, *replies: str) -> "ScriptedBackend":
        return cls([(None, reply) for reply in replies])

    def send_once(self, req: ChatRequest) -> str:
        with self._lock:
            if self.cursor >= len(self.script):
                raise ScriptExhausted(
                    f"script exhausted after {len(self.script)} replies (tag {req.tag!r})")
            matcher, reply = self.script[self.cursor]
            prompt = (self.system_and_user(req))
            if matcher is not None and matcher not in prompt:
                raise ScriptMismatch(
                    f"step {self.cursor + 1} expected prompt containing {matcher!r} "
                    f"(tag {req.tag!r})")
            self.cursor += 1
            return reply

    @staticmethod
    def system_and_user(req: ChatRequest) -> str:
        return (req.system + "\n" + req.user) if req.system else req.user

    def remaining(self) -> int:
        with self._lock:
            return len(self.script) - self.cursor


def load_script(path: str | Path) -> ScriptedBackend:
    """Script file: JSON list of {"reply": ..., "matcher"?: ...}."""
    items = json.loads(Path(path).read_text(encoding="utf-8"))
    return ScriptedBackend([(item.get("matcher"), item["reply"]) for item in items])


class HttpChatBackend:
    """Chat-completions endpoint client; 5xx and transport errors retry.

    Shareable across threads; max_inflight caps concurrent requests.
    """

    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 timeout: float = 60.0, max_retries: int = 2, backoff_base: float = 0.5,
                 max_inflight: int = 4):
        self.name = f"http:{model}"
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self._url = base_url.rstrip("/")
        self._model = model
        self._timeout = timeout
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._inflight = threading.BoundedSemaphore(max_inflight)

    def send_once(self, req: ChatRequest) -> str:
        messages = []
        if req.system:
            messages.append({"role": "system", "content": req.system})
        messages.append({"role": "user", "content": req.user})
        payload: dict = {"model": self._model, "messages": messages,
                         "temperature": req.temperature}
        if req.max_tokens is not None:
            payload["max_tokens"] = req.max_tokens
        try:
            with self._inflight:
                resp = httpx.post(self._url, json=payload, headers=self._headers,
                                  timeout=self._timeout)
        except httpx.TimeoutException as exc:
            raise _Retryable(f"request deadline exceeded: {exc}", timed_out=True) from exc
        except httpx.TransportError as exc:
            raise _Retryable(f"transport failure: {exc}") from exc
        if resp.status_code >= 500:
            raise _Retryable(f"server returned {resp.status_code}")
        if resp.status_code != 200:
            raise BackendError(f"backend returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed completion payload: {exc}") from exc


@dataclass
class Transcript:
    """Ordered log of every LLM call; one record per (request, reply) pair."""

    records: list[dict] = field(default_factory=list)
    path: str | None = None
    request_id: str | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def with_request(self, request_id: str) -> "Transcript":
        """View that stamps records with a request id; shares the record list."""
        child = Transcript(records=self.records, path=self.path, request_id=request_id)
        child._lock = self._lock
        return child

    def append(self, *, tag: str, request_text: str, reply_text: str,
               latency: float, attempt: int) -> None:
        record = {"tag": tag, "request": request_text, "reply": reply_text,
                  "latency": latency, "attempt": attempt}
        if self.request_id is not None:
            record["request_id"] = self.request_id
        with self._lock:
            self.records.append(record)
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def __len__(self) -> int:
        return len(self.records)


def complete(backend: Backend, req: ChatRequest,
             transcript: Transcript | None = None) -> ChatResponse:
    """One chat call with retries: attempts = max_retries + 1, backoff
    backoff_base * 2^attempt between transport failures."""
    started = time.monotonic()
    last: _Retryable | None = None
    for attempt in range(1, backend.max_retries + 2):
        try:
            text = backend.send_once(req)
        except _Retryable as exc:
            last = exc
            if attempt <= backend.max_retries:
                time.sleep(backend.backoff_base * (2 ** attempt))
            continue
        latency = time.monotonic() - started
        if transcript is not None:
            transcript.append(tag=req.tag, request_text=req.user, reply_text=text,
                              latency=latency, attempt=attempt)
        return ChatResponse(text=text, backend=backend.name, latency=latency,
                            attempt=attempt)
    assert last is not None
    if last.timed_out:
        raise LlmTimeout(str(last))
    raise BackendError(f"gave up after {backend.max_retries + 1} attempts: {last}")
