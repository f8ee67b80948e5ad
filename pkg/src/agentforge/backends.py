"""Completion backends: a live HTTP endpoint and a scripted transcript.

The scripted backend replays a JSONL transcript; each line describes one
expected request (matching rules) and the canned body to return. It also keeps
a logical clock so timings serialize deterministically in tests.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
from pathlib import Path
from typing import Any, Optional, Protocol

from .errors import RateLimited, StateError, TransportError, ValidationError

logger = logging.getLogger(__name__)

API_KEY_ENV = "FORGE_API_KEY"
API_BASE_ENV = "FORGE_API_BASE"


class Backend(Protocol):
    def send(
        self,
        model_id: str,
        system_prompt: str,
        user_prompt: str,
        temperature: float,
        expected_fields: tuple[str, ...] = (),
    ) -> tuple[str, dict[str, int]]:
        """Return (raw_body, usage). May raise RateLimited or TransportError."""
        ...

    def now(self) -> float:
        """Clock for wall-time accounting. Logical under the scripted backend."""
        ...


class ScriptEntry:
    """One transcript line: matching rules plus a canned outcome."""

    __slots__ = ("match", "response", "raw", "fault", "usage", "reusable", "index")

    def __init__(self, data: dict[str, Any], index: int):
        self.match: dict[str, Any] = data.get("match", {})
        self.response: Optional[dict[str, Any]] = data.get("response")
        self.raw: Optional[str] = data.get("raw")
        self.fault: Optional[str] = data.get("fault")
        self.usage: dict[str, int] = data.get("usage", {"prompt_tokens": 0, "completion_tokens": 0})
        self.reusable: bool = bool(data.get("reusable", False))
        self.index = index
        if self.response is None and self.raw is None and self.fault is None:
            raise ValidationError(f"script entry {index}: needs one of response/raw/fault")

    def matches(
        self, model_id: str, system_prompt: str, user_prompt: str, expected_fields: tuple[str, ...]
    ) -> bool:
        rules = self.match
        if "model_id" in rules and rules["model_id"] != model_id:
            return False
        if "expected_fields" in rules and tuple(rules["expected_fields"]) != tuple(expected_fields):
            return False
        if "system_contains" in rules and rules["system_contains"] not in system_prompt:
            return False
        if "user_contains" in rules and rules["user_contains"] not in user_prompt:
            return False
        if "user_suffix" in rules and not user_prompt.rstrip().endswith(rules["user_suffix"]):
            return False
        return True

    def body(self) -> str:
        if self.raw is not None:
            return self.raw
        return json.dumps(self.response, ensure_ascii=False)


class ScriptedBackend:
    """Deterministic transcript replay with first-match semantics.

    Entries are scanned in file order; the first unconsumed entry whose rules
    match the request is used (and consumed, unless marked reusable). Faults:
    "rate_limit" raises RateLimited once per consumption; "transport" raises
    TransportError.
    """

    def __init__(self, script_path: str | Path):
        self.script_path = Path(script_path)
        self.entries: list[ScriptEntry] = []
        with self.script_path.open(encoding="utf-8") as handle:
            for i, line in enumerate(handle):
                line = line.strip()
                if not line:
                    continue
                self.entries.append(ScriptEntry(json.loads(line), i))
        self._consumed: set[int] = set()
        self.served: list[dict[str, Any]] = []
        self._ticks = 0
        self._lock = threading.Lock()

    def send(
        self,
        model_id: str,
        system_prompt: str,
        user_prompt: str,
        temperature: float,
        expected_fields: tuple[str, ...] = (),
    ) -> tuple[str, dict[str, int]]:
        with self._lock:
            self._ticks += 1
            entry = self._find(model_id, system_prompt, user_prompt, expected_fields)
            if not entry.reusable:
                self._consumed.add(entry.index)
            self.served.append(
                {
                    "entry": entry.index,
                    "model_id": model_id,
                    "system_prompt": system_prompt,
                    "user_prompt": user_prompt,
                    "temperature": temperature,
                    "expected_fields": list(expected_fields),
                }
            )
        if entry.fault == "rate_limit":
            raise RateLimited("scripted rate limit")
        if entry.fault == "transport":
            raise TransportError("scripted transport failure")
        return entry.body(), dict(entry.usage)

    def _find(
        self, model_id: str, system_prompt: str, user_prompt: str, expected_fields: tuple[str, ...]
    ) -> ScriptEntry:
        for entry in self.entries:
            if entry.index in self._consumed:
                continue
            if entry.matches(model_id, system_prompt, user_prompt, expected_fields):
                return entry
        raise StateError(
            f"script exhausted: no entry matches model={model_id!r} "
            f"user_prompt tail={user_prompt.rstrip()[-120:]!r}"
        )

    def now(self) -> float:
        # Logical clock: one unit per request, so serialized wall times are
        # identical across reruns of the same script.
        with self._lock:
            return float(self._ticks)

    def state(self) -> dict[str, Any]:
        with self._lock:
            return {"consumed": sorted(self._consumed), "ticks": self._ticks}

    def restore(self, state: dict[str, Any]) -> None:
        with self._lock:
            self._consumed = set(state.get("consumed", []))
            self._ticks = int(state.get("ticks", 0))


class LiveBackend:
    """OpenAI-style chat-completions endpoint over HTTPS.

    Base URL and key come from FORGE_API_BASE / FORGE_API_KEY unless given
    explicitly. Raises RateLimited on 429 (the gateway owns backoff policy).
    """

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 120.0,
        transport: Any = None,
    ):
        import httpx

        base = base_url or os.environ.get(API_BASE_ENV)
        if not base:
            raise StateError(f"live backend needs a base URL ({API_BASE_ENV})")
        self.base_url = base.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def send(
        self,
        model_id: str,
        system_prompt: str,
        user_prompt: str,
        temperature: float,
        expected_fields: tuple[str, ...] = (),
    ) -> tuple[str, dict[str, int]]:
        import httpx

        payload = {
            "model": model_id,
            "temperature": temperature,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "response_format": {"type": "json_object"},
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._client.post(f"{self.base_url}/chat/completions", json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if resp.status_code == 429:
            retry_after = resp.headers.get("Retry-After")
            raise RateLimited("endpoint rate limit", retry_after=float(retry_after) if retry_after else None)
        if resp.status_code >= 500:
            raise RateLimited(f"server error {resp.status_code}")
        if resp.status_code >= 400:
            raise TransportError(f"endpoint rejected request: {resp.status_code} {resp.text[:300]}")
        data = resp.json()
        try:
            body = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape: {data}") from exc
        usage = data.get("usage", {})
        return body, {
            "prompt_tokens": int(usage.get("prompt_tokens", 0)),
            "completion_tokens": int(usage.get("completion_tokens", 0)),
        }

    def now(self) -> float:
        return time.monotonic()

    def close(self) -> None:
        self._client.close()
