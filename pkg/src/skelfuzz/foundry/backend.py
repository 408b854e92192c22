"""Language-model backends: an HTTP chat-completion client and a scripted stub."""

from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx


class BackendError(RuntimeError):
    def __init__(self, message: str, retries: int = 0):
        super().__init__(message)
        self.retries = retries
        self.report = None  # partial CorrectionReport, attached by the caller


class LmBackend(Protocol):
    def complete(self, prompt: str, temperature: float = 0.2) -> str: ...


class StubBackend:
    """Replays canned completions in order and records every prompt.

    Raises :class:`BackendError` once the script is exhausted.
    """

    def __init__(self, responses: Sequence[str]):
        self.responses = list(responses)
        self.prompts: list[str] = []
        self._next = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str, temperature: float = 0.2) -> str:
        with self._lock:
            self.prompts.append(prompt)
            if self._next >= len(self.responses):
                raise BackendError(f"stub exhausted after {len(self.responses)} responses")
            out = self.responses[self._next]
            self._next += 1
            return out

    @property
    def calls(self) -> int:
        return len(self.prompts)


class StubScript:
    """Stub fixture file: a JSON list of completions shared by all theories,
    or an object mapping theory names to their own lists."""

    def __init__(self, data):
        if isinstance(data, list):
            self.shared: StubBackend | None = StubBackend([str(x) for x in data])
            self.per_theory: dict[str, list[str]] = {}
        elif isinstance(data, dict):
            self.shared = None
            self.per_theory = {str(k): [str(x) for x in v] for k, v in data.items()}
        else:
            raise ValueError("stub script must be a JSON list or object")

    @classmethod
    def load(cls, path: str | Path) -> "StubScript":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def session(self, theory: str) -> StubBackend:
        if self.shared is not None:
            return self.shared
        if theory not in self.per_theory:
            raise BackendError(f"stub script has no responses for theory {theory}")
        return StubBackend(self.per_theory[theory])


class HttpBackend:
    """OpenAI-style ``/chat/completions`` client.

    The bearer token is read from the environment variable named by
    ``token_env``. Transport errors, timeouts and 5xx/429 responses are
    retried with exponential backoff; after ``retries`` failed attempts a
    :class:`BackendError` is raised.
    """

    def __init__(
        self,
        url: str,
        model: str,
        token_env: str = "SKELFUZZ_LM_TOKEN",
        timeout_s: float = 120.0,
        retries: int = 3,
        backoff_s: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
        client: httpx.Client | None = None,
    ):
        self.url = url
        self.model = model
        self.token_env = token_env
        self.retries = retries
        self.backoff_s = backoff_s
        self.sleep = sleep
        self.client = client or httpx.Client(timeout=timeout_s)

    def _headers(self) -> dict:
        h = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            h["Authorization"] = f"Bearer {token}"
        return h

    def complete(self, prompt: str, temperature: float = 0.2) -> str:
        body = {"model": self.model, "messages": [{"role": "user", "content": prompt}], "temperature": temperature}
        last = ""
        for attempt in range(self.retries):
            if attempt:
                self.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                r = self.client.post(self.url, json=body, headers=self._headers())
            except httpx.HTTPError as e:
                last = f"{type(e).__name__}: {e}"
                continue
            if r.status_code == 429 or r.status_code >= 500:
                last = f"HTTP {r.status_code}"
                continue
            if r.status_code >= 400:
                raise BackendError(f"HTTP {r.status_code}: {r.text[:200]}", attempt + 1)
            try:
                return r.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as e:
                raise BackendError(f"malformed completion response: {e}", attempt + 1) from None
        raise BackendError(f"language model unreachable after {self.retries} attempts: {last}", self.retries)
