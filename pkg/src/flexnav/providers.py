"""Provider plumbing.

Every model role is a callable ``provider(request: dict) -> str``. The
request is a JSON-able dict; chat-backed roles carry a ``messages`` list in
OpenAI chat format, and may carry a ``meta`` dict that only offline mocks
read. Live adapters ignore everything except ``messages``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import httpx

log = logging.getLogger(__name__)

Provider = Callable[[dict], str]

ROLES = ("perceiver", "planner", "verifier", "follower", "tiebreaker", "extractor", "scorer")


class ProviderError(RuntimeError):
    """A provider failed after its retry budget."""


class ReplayMismatchError(ProviderError):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def request_hash(role: str, request: dict) -> str:
    return digest(role + "\n" + canonical_json(request))


def prompt_chars(request: dict) -> int:
    msgs = request.get("messages")
    if msgs:
        return sum(len(m.get("content", "")) for m in msgs)
    return len(canonical_json(request))


@dataclass
class ProviderBinding:
    """Connection settings for one role."""

    endpoint: Optional[str] = None
    model: str = "gpt-4o-mini"
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0
    max_concurrency: Optional[int] = None  # None = unlimited, 1 = serialized
    temperature: float = 0.0


class ChatAdapter:
    """OpenAI-compatible ``/chat/completions`` client with retry and backoff."""

    def __init__(self, binding: ProviderBinding, api_key: Optional[str] = None,
                 client: Optional[httpx.Client] = None, sleep=time.sleep):
        self.binding = binding
        base = binding.endpoint or os.environ.get("FLEXNAV_API_BASE", "https://api.openai.com/v1")
        self.url = base.rstrip("/") + "/chat/completions"
        self.api_key = api_key if api_key is not None else os.environ.get("FLEXNAV_API_KEY", "")
        self.client = client or httpx.Client(timeout=binding.timeout)
        self._sleep = sleep
        self.attempts = 0

    def __call__(self, request: dict) -> str:
        if "messages" not in request:
            raise ProviderError("chat adapter needs a 'messages' request")
        payload = {
            "model": self.binding.model,
            "messages": request["messages"],
            "temperature": self.binding.temperature,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last: Exception | None = None
        for attempt in range(self.binding.retries + 1):
            if attempt:
                self._sleep(self.binding.backoff * 2 ** (attempt - 1))
            self.attempts += 1
            try:
                resp = self.client.post(self.url, json=payload, headers=headers,
                                        timeout=self.binding.timeout)
                if resp.status_code >= 500 or resp.status_code == 429:
                    last = ProviderError(f"HTTP {resp.status_code}")
                    continue
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"] or ""
            except httpx.HTTPStatusError as exc:
                # 4xx other than 429 will not improve on retry
                raise ProviderError(f"chat request rejected: {exc}") from exc
            except (httpx.TransportError, KeyError, IndexError, ValueError) as exc:
                last = exc
        raise ProviderError(f"chat request failed after {self.binding.retries + 1} attempts: {last}")


class ReplayBook:
    """Responses recorded in trace files, keyed by (role, request hash, occurrence).

    Identical requests are answered in the order they were recorded.
    """

    def __init__(self, events):
        self._book: dict[tuple[str, str], list[dict]] = defaultdict(list)
        for ev in events:
            if ev.get("kind") == "call":
                self._book[(ev["role"], ev["request_hash"])].append(ev)
        self._cursor: dict[tuple[str, str], int] = defaultdict(int)

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBook":
        with open(path, encoding="utf-8") as fh:
            return cls(json.loads(line) for line in fh if line.strip())

    def provider(self, role: str) -> Provider:
        def replay(request: dict) -> str:
            key = (role, request_hash(role, request))
            hits = self._book.get(key, [])
            i = self._cursor[key]
            if i >= len(hits):
                raise ReplayMismatchError(f"no recorded {role} response for request {key[1]}")
            self._cursor[key] = i + 1
            ev = hits[i]
            if "error" in ev:
                raise ProviderError(ev["error"])
            return ev["response"]

        return replay


@dataclass
class ProviderSet:
    """Providers bound to every role for one episode."""

    planner: Provider
    verifier: Provider
    followers: list[Provider]
    tiebreaker: Provider
    perceiver: Provider
    extractor: Provider
    scorer: Provider

    def roles(self) -> dict[str, Provider]:
        out = {
            "planner": self.planner,
            "verifier": self.verifier,
            "tiebreaker": self.tiebreaker,
            "perceiver": self.perceiver,
            "extractor": self.extractor,
            "scorer": self.scorer,
        }
        for i, f in enumerate(self.followers):
            out[f"follower{i}"] = f
        return out


def replay_providers(book: ReplayBook, n_followers: int = 3) -> ProviderSet:
    return ProviderSet(
        planner=book.provider("planner"),
        verifier=book.provider("verifier"),
        followers=[book.provider(f"follower{i}") for i in range(n_followers)],
        tiebreaker=book.provider("tiebreaker"),
        perceiver=book.provider("perceiver"),
        extractor=book.provider("extractor"),
        scorer=book.provider("scorer"),
    )
