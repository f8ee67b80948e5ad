"""Single point of contact with foundation-model endpoints.

Handles structured-output completions: format instruction, JSON coercion with
bounded corrective re-asks, retry with exponential backoff on rate limits, an
optional content-addressed response cache, and per-model usage accounting.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .backends import Backend
from .errors import RateLimited, SchemaError, ValidationError

logger = logging.getLogger(__name__)

# Sentence every structured request leads the format block with.
FORMAT_SENTENCE = "Reply EXACTLY with the following JSON format."

MAX_BACKOFF_ATTEMPTS = 8
BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0
BACKOFF_JITTER = 0.2
MAX_REASKS = 3

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n|\n?```$")


def format_output_instruction(expected_fields: list[str]) -> str:
    """Build the output-format instruction for a structured request.

    Raises:
        ValidationError: empty field list.
    """
    if not expected_fields:
        raise ValidationError("expected_fields must be nonempty")
    return (
        f"{FORMAT_SENTENCE}\n"
        f"{str(list(expected_fields))}\n"
        "DO NOT MISS ANY FIELDS AND MAKE SURE THE JSON FORMAT IS CORRECT!\n"
    )


@dataclass(frozen=True)
class FmRequest:
    model_id: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.5
    expected_fields: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.expected_fields:
            raise ValidationError("expected_fields must be nonempty")
        if len(set(self.expected_fields)) != len(self.expected_fields):
            raise ValidationError(f"duplicate expected fields: {self.expected_fields}")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")


@dataclass(frozen=True)
class FmResponse:
    fields: dict[str, str]
    raw: str
    usage: dict[str, int]


@dataclass
class UsageLedger:
    """Per-model counters of requests, tokens, and cost. Monotone, thread-safe."""

    prices: dict[str, dict[str, float]] = field(default_factory=dict)
    _counters: dict[str, dict[str, float]] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, model_id: str, prompt_tokens: int, completion_tokens: int) -> None:
        price = self.prices.get(model_id, {})
        cost = prompt_tokens * price.get("prompt", 0.0) + completion_tokens * price.get("completion", 0.0)
        with self._lock:
            entry = self._counters.setdefault(
                model_id, {"requests": 0, "prompt_tokens": 0, "completion_tokens": 0, "cost_units": 0.0}
            )
            entry["requests"] += 1
            entry["prompt_tokens"] += prompt_tokens
            entry["completion_tokens"] += completion_tokens
            entry["cost_units"] += cost

    def total_cost(self) -> float:
        with self._lock:
            return sum(e["cost_units"] for e in self._counters.values())

    def snapshot(self) -> dict[str, dict[str, float]]:
        with self._lock:
            return {m: dict(e) for m, e in self._counters.items()}

    def restore(self, counters: dict[str, dict[str, float]]) -> None:
        with self._lock:
            self._counters = {m: dict(e) for m, e in counters.items()}


def usage_report(ledger: UsageLedger) -> dict[str, Any]:
    """Summarize the ledger: per-model totals plus a grand total."""
    per_model = ledger.snapshot()
    total = {"requests": 0, "prompt_tokens": 0, "completion_tokens": 0, "cost_units": 0.0}
    for entry in per_model.values():
        for key in total:
            total[key] += entry[key]
    return {"models": per_model, "total": total}


class ResponseCache:
    """Content-addressed cache of raw response bodies, one file per request tuple."""

    def __init__(self, cache_dir: str | Path):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def key(request: FmRequest, sample_index: int) -> str:
        payload = json.dumps(
            [
                request.model_id,
                request.system_prompt,
                request.user_prompt,
                request.temperature,
                list(request.expected_fields),
                sample_index,
            ],
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def lookup(self, request: FmRequest, sample_index: int) -> Optional[dict[str, Any]]:
        path = self.cache_dir / f"{self.key(request, sample_index)}.json"
        if not path.exists():
            return None
        with self._lock:
            return json.loads(path.read_text(encoding="utf-8"))

    def store(self, request: FmRequest, sample_index: int, raw: str, usage: dict[str, int]) -> None:
        path = self.cache_dir / f"{self.key(request, sample_index)}.json"
        record = {"raw": raw, "usage": usage}
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(record, ensure_ascii=False), encoding="utf-8")
            tmp.replace(path)


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = _FENCE_RE.sub("", text)
        text = _FENCE_RE.sub("", text)  # closing fence
    return text.strip()


def parse_structured(raw: str, expected_fields: tuple[str, ...]) -> dict[str, str]:
    """Parse a response body into exactly the expected fields.

    Raises:
        SchemaError: body is not a JSON object or a field is missing.
    """
    text = _strip_fences(raw)
    if not text.startswith("{"):
        # Salvage an embedded object if the model wrapped it in chatter.
        start, end = text.find("{"), text.rfind("}")
        if start == -1 or end <= start:
            raise SchemaError(f"response is not a JSON object: {raw[:200]!r}")
        text = text[start : end + 1]
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"response must be a JSON object, got {type(data).__name__}")
    fields = {}
    for name in expected_fields:
        if name not in data:
            raise SchemaError(f"response missing field {name!r}")
        value = data[name]
        fields[name] = value if isinstance(value, str) else json.dumps(value, ensure_ascii=False)
    return fields


class FmGateway:
    """Structured completions over a configured backend.

    Thread-safe; many completions may be in flight. A per-model token bucket
    (when rate limits are configured) serializes admission.
    """

    def __init__(
        self,
        backend: Backend,
        ledger: Optional[UsageLedger] = None,
        cache: Optional[ResponseCache] = None,
        sleep: Callable[[float], None] = time.sleep,
        rate_limits: Optional[dict[str, float]] = None,
        rng: Optional[random.Random] = None,
    ):
        self.backend = backend
        self.ledger = ledger if ledger is not None else UsageLedger()
        self.cache = cache
        self._sleep = sleep
        self._rng = rng if rng is not None else random.Random()
        self.backoff_log: list[float] = []
        self._buckets = {
            model: _TokenBucket(rate) for model, rate in (rate_limits or {}).items()
        }
        self._lock = threading.Lock()

    def clock(self) -> float:
        return self.backend.now()

    def complete_structured(self, request: FmRequest, sample_index: int = 0) -> FmResponse:
        """Run one structured completion.

        Prompts are sent verbatim (callers embed their own format blocks);
        malformed or incomplete replies trigger up to MAX_REASKS corrective
        re-asks that restate the format instruction.

        Raises:
            SchemaError: after exhausting re-asks.
            TransportError: backend failure (propagated from the backend).
        """
        if self.cache is not None:
            hit = self.cache.lookup(request, sample_index)
            if hit is not None:
                fields = parse_structured(hit["raw"], request.expected_fields)
                return FmResponse(fields=fields, raw=hit["raw"], usage=dict(hit["usage"]))

        instruction = format_output_instruction(list(request.expected_fields))
        user_prompt = request.user_prompt
        last_error: Optional[SchemaError] = None
        for ask in range(1 + MAX_REASKS):
            raw, usage = self._send_with_backoff(request, user_prompt)
            self.ledger.record(request.model_id, usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0))
            try:
                fields = parse_structured(raw, request.expected_fields)
            except SchemaError as exc:
                last_error = exc
                logger.warning("malformed response (ask %d/%d): %s", ask + 1, 1 + MAX_REASKS, exc)
                user_prompt = (
                    f"{request.user_prompt}\n\n"
                    f"Your previous reply could not be used: {exc}.\n"
                    f"{instruction}"
                )
                continue
            if self.cache is not None:
                self.cache.store(request, sample_index, raw, usage)
            return FmResponse(fields=fields, raw=raw, usage=usage)
        raise SchemaError(f"no usable response after {MAX_REASKS} re-asks: {last_error}")

    def _send_with_backoff(self, request: FmRequest, user_prompt: str) -> tuple[str, dict[str, int]]:
        bucket = self._buckets.get(request.model_id)
        delay = BACKOFF_BASE_SECONDS
        for attempt in range(MAX_BACKOFF_ATTEMPTS):
            if bucket is not None:
                wait = bucket.acquire()
                if wait > 0:
                    self._sleep(wait)
            try:
                return self.backend.send(
                    model_id=request.model_id,
                    system_prompt=request.system_prompt,
                    user_prompt=user_prompt,
                    temperature=request.temperature,
                    expected_fields=request.expected_fields,
                )
            except RateLimited as exc:
                if attempt == MAX_BACKOFF_ATTEMPTS - 1:
                    raise
                jitter = 1.0 + self._rng.uniform(-BACKOFF_JITTER, BACKOFF_JITTER)
                wait = (exc.retry_after if exc.retry_after is not None else delay) * jitter
                with self._lock:
                    self.backoff_log.append(wait)
                logger.info("rate limited on %s; backing off %.2fs", request.model_id, wait)
                self._sleep(wait)
                delay *= BACKOFF_FACTOR
        raise RateLimited("backoff attempts exhausted")  # pragma: no cover - loop raises earlier


class _TokenBucket:
    """Minimal token bucket: `rate` admissions per second, burst of 1 second."""

    def __init__(self, rate: float):
        self.rate = rate
        self.capacity = max(rate, 1.0)
        self.tokens = self.capacity
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        with self._lock:
            now = time.monotonic()
            self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
            self.updated = now
            if self.tokens >= 1.0:
                self.tokens -= 1.0
                return 0.0
            needed = (1.0 - self.tokens) / self.rate
            self.tokens = 0.0
            return needed
