"""Completion backends: a live OpenAI-compatible HTTP client, a scripted
backend for deterministic replay, and a persistent response cache.

All backends share one contract: `complete(request) -> Completion`, a
monotonically increasing `calls` counter, and safety under concurrent use.
Cache keys are content-addressed digests of a canonical request
serialization, so they are stable across processes and platforms.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from fnmatch import fnmatchcase
from typing import Callable, Iterable, Mapping

from .errors import BudgetExceeded, FixtureMiss, StorageError, TransportError

DEFAULT_MAX_TOKENS = 512

ENV_API_KEY = "OPENAI_API_KEY"
ENV_BASE_URL = "OPENAI_BASE_URL"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS
    stop_sequences: tuple[str, ...] = ()
    sample_index: int = 0
    model_id: str = "default"

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.sample_index < 0:
            raise ValueError("sample_index must be non-negative")


@dataclass(frozen=True)
class Completion:
    text: str
    finish_reason: str = "stop"  # stop | length | error
    usage: Mapping[str, int] | None = None


def canonical_request(request: CompletionRequest) -> str:
    """Sorted-key serialization with normalized line endings.

    sample_index is zeroed at temperature 0 so that greedy requests which
    differ only in path index share one cache entry.
    """
    prompt = request.prompt.replace("\r\n", "\n").replace("\r", "\n")
    payload = {
        "max_tokens": request.max_tokens,
        "model_id": request.model_id,
        "prompt": prompt,
        "sample_index": request.sample_index if request.temperature > 0 else 0,
        "stop_sequences": list(request.stop_sequences),
        "temperature": format(float(request.temperature), ".6g"),
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def cache_key(request: CompletionRequest) -> str:
    return hashlib.sha256(canonical_request(request).encode("utf-8")).hexdigest()


class Backend:
    """Base class: counts calls, enforces an optional call/token budget."""

    model_id = "default"

    def __init__(self, max_calls: int | None = None, max_total_tokens: int | None = None):
        self.calls = 0
        self.tokens_used = 0
        self.max_calls = max_calls
        self.max_total_tokens = max_total_tokens
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> Completion:
        with self._lock:
            if self.max_calls is not None and self.calls >= self.max_calls:
                raise BudgetExceeded(f"call budget of {self.max_calls} reached")
            if self.max_total_tokens is not None and self.tokens_used >= self.max_total_tokens:
                raise BudgetExceeded(f"token budget of {self.max_total_tokens} reached")
            self.calls += 1
        completion = self._complete(request)
        if completion.usage:
            with self._lock:
                self.tokens_used += sum(completion.usage.values())
        return completion

    def _complete(self, request: CompletionRequest) -> Completion:
        raise NotImplementedError


class _JsonlStore:
    """Append-only line-delimited record store, compacted (last write wins
    per key) when loaded. Safe for concurrent writers within a process."""

    def __init__(self, path: str | os.PathLike | None = None, writable: bool = True):
        self.path = os.fspath(path) if path is not None else None
        self.writable = writable
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path and os.path.exists(self.path):
            self._load()

    def _load(self) -> None:
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "key" in record:
                    self._entries[record["key"]] = record.get("response_text", "")

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> str | None:
        return self._entries.get(key)

    def put(self, key: str, response_text: str, model_id: str = "default") -> None:
        if not self.writable:
            raise StorageError("store is write-disabled")
        with self._lock:
            if self._entries.get(key) == response_text:
                return  # idempotent re-record
            self._entries[key] = response_text
            if self.path:
                record = {
                    "key": key,
                    "model_id": model_id,
                    "response_text": response_text,
                    "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
                }
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                    fh.flush()


class ResponseCache(_JsonlStore):
    """Persistent completion cache keyed by request digest."""


class ScriptedBackend(Backend):
    """Deterministic backend driven by a fixture.

    Digest mode maps request digests to response texts; lookups are pure and
    a missing digest raises FixtureMiss. Queue mode holds (pattern, response)
    pairs consumed strictly in order (single consumer only; do not share a
    queue-mode fixture across concurrent pipelines).
    """

    def __init__(
        self,
        entries: Mapping[str, str] | None = None,
        queue: Iterable[tuple[str, str]] | None = None,
        model_id: str = "scripted",
        record_store: _JsonlStore | None = None,
        max_calls: int | None = None,
    ):
        super().__init__(max_calls=max_calls)
        self.model_id = model_id
        self._entries = dict(entries or {})
        self._queue = list(queue) if queue is not None else None
        self._queue_lock = threading.Lock()
        self._record_store = record_store

    @classmethod
    def from_file(cls, path: str | os.PathLike, model_id: str = "scripted") -> "ScriptedBackend":
        """Load a JSONL fixture. Records with a "key" field populate digest
        mode; records with a "pattern" field form an ordered queue."""
        entries: dict[str, str] = {}
        queue: list[tuple[str, str]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "pattern" in record:
                    queue.append((record["pattern"], record.get("response_text", record.get("response", ""))))
                elif "key" in record:
                    entries[record["key"]] = record.get("response_text", "")
        return cls(entries=entries, queue=queue or None, model_id=model_id)

    def _complete(self, request: CompletionRequest) -> Completion:
        if self._queue is not None:
            with self._queue_lock:
                if not self._queue:
                    raise FixtureMiss("queue fixture exhausted")
                pattern, response = self._queue.pop(0)
            if not fnmatchcase(request.prompt, pattern):
                raise FixtureMiss(f"prompt does not match queued pattern {pattern!r}")
            return Completion(text=response)
        key = cache_key(request)
        if key not in self._entries:
            raise FixtureMiss(f"no fixture entry for digest {key[:12]}...")
        return Completion(text=self._entries[key])

    def record(self, request: CompletionRequest, completion: Completion) -> None:
        """Store a response so later complete() calls replay it (fixture-record mode)."""
        if self._record_store is None:
            raise StorageError("backend has no record store attached")
        key = cache_key(request)
        self._record_store.put(key, completion.text, self.model_id)
        self._entries[key] = completion.text


class CachingBackend(Backend):
    """Wraps another backend with a read-through response cache.

    Repeated identical requests (by digest) are served from the cache and
    never reach the inner backend, which is what makes temperature-0 reruns
    and iteration-budget extensions free.
    """

    def __init__(self, inner: Backend, cache: ResponseCache | None = None):
        super().__init__()
        self.inner = inner
        self.cache = cache if cache is not None else ResponseCache()
        self.model_id = inner.model_id

    def _complete(self, request: CompletionRequest) -> Completion:
        key = cache_key(request)
        hit = self.cache.get(key)
        if hit is not None:
            return Completion(text=hit)
        completion = self.inner.complete(request)
        self.record(request, completion)
        return completion

    def record(self, request: CompletionRequest, completion: Completion) -> None:
        self.cache.put(cache_key(request), completion.text, request.model_id)


_TRANSIENT_STATUS = {408, 409, 429, 500, 502, 503, 504}


class LiveBackend(Backend):
    """OpenAI-compatible chat/completions client.

    Endpoint and key come from OPENAI_BASE_URL / OPENAI_API_KEY unless given
    explicitly. Transient transport failures are retried with exponential
    backoff (3 attempts, 1s/2s/4s); content errors are never retried. At most
    `max_parallel` requests are in flight at once.
    """

    def __init__(
        self,
        model_id: str,
        base_url: str | None = None,
        api_key: str | None = None,
        retries: int = 3,
        backoff: tuple[float, ...] = (1.0, 2.0, 4.0),
        max_parallel: int = 4,
        timeout: float = 120.0,
        max_calls: int | None = None,
        max_total_tokens: int | None = None,
        session=None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__(max_calls=max_calls, max_total_tokens=max_total_tokens)
        self.model_id = model_id
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, DEFAULT_BASE_URL)).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self._sleep = sleep
        self._limiter = threading.Semaphore(max_parallel)
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def _post(self, request: CompletionRequest):
        body = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.stop_sequences:
            body["stop"] = list(request.stop_sequences)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return self._session.post(
            f"{self.base_url}/chat/completions", json=body, headers=headers, timeout=self.timeout
        )

    def _complete(self, request: CompletionRequest) -> Completion:
        import requests

        last_error: Exception | None = None
        with self._limiter:
            for attempt in range(self.retries):
                try:
                    response = self._post(request)
                except requests.RequestException as exc:
                    last_error = exc
                else:
                    if response.status_code == 200:
                        return self._parse(response.json(), request)
                    if response.status_code not in _TRANSIENT_STATUS:
                        raise TransportError(
                            f"endpoint returned {response.status_code}: {response.text[:200]}"
                        )
                    last_error = TransportError(f"transient status {response.status_code}")
                if attempt < self.retries - 1:
                    self._sleep(self.backoff[min(attempt, len(self.backoff) - 1)])
        raise TransportError(f"giving up after {self.retries} attempts") from last_error

    @staticmethod
    def _parse(payload: dict, request: CompletionRequest) -> Completion:
        try:
            choice = payload["choices"][0]
            text = choice.get("message", {}).get("content")
            if text is None:
                text = choice.get("text", "")
            finish = choice.get("finish_reason") or "stop"
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
        for stop in request.stop_sequences:
            if stop and text.endswith(stop):
                text = text[: -len(stop)]
        usage = payload.get("usage")
        if usage is not None:
            usage = {k: v for k, v in usage.items() if isinstance(v, int)}
        if finish not in ("stop", "length"):
            finish = "stop" if finish else "error"
        return Completion(text=text, finish_reason=finish, usage=usage)
