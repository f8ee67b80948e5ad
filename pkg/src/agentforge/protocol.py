"""Wire protocol between the orchestrator and agent workers.

Newline-delimited UTF-8 JSON frames over a local pipe (or any byte stream).
Unknown fields are ignored for forward compatibility; the protocol version is
negotiated with a hello/hello_ack exchange on startup.
"""
from __future__ import annotations

import json
from typing import Any

from .errors import ParseError

PROTOCOL_VERSION = 1

HELLO = "hello"
HELLO_ACK = "hello_ack"
EXECUTE_AGENT = "execute_agent"
FM_QUERY = "fm_query"
FM_RESULT = "fm_result"
DONE = "done"
PING = "ping"
PONG = "pong"

STATUS_OK = "ok"
STATUS_ERROR = "error"
STATUS_TIMEOUT = "timeout"
STATUS_LIMIT = "limit_exceeded"

DEFAULT_LIMITS = {
    "wall_seconds": 120.0,
    "memory_bytes": 1 << 30,
    "max_model_calls": 300,
}


def encode_frame(frame: dict[str, Any]) -> str:
    return json.dumps(frame, ensure_ascii=False, separators=(",", ":")) + "\n"


def decode_frame(line: str) -> dict[str, Any]:
    try:
        frame = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad frame: {exc}: {line[:200]!r}") from exc
    if not isinstance(frame, dict) or "type" not in frame:
        raise ParseError(f"frame without a type: {line[:200]!r}")
    return frame


def hello_frame(version: int = PROTOCOL_VERSION) -> dict[str, Any]:
    return {"type": HELLO, "protocol_version": version}


def hello_ack_frame(version: int = PROTOCOL_VERSION) -> dict[str, Any]:
    return {"type": HELLO_ACK, "protocol_version": version}


def execute_agent_frame(
    request_id: str,
    agent_source: str,
    task_payload: Any,
    tool_set: dict[str, Any],
    limits: dict[str, Any] | None = None,
    repeat_index: int = 0,
) -> dict[str, Any]:
    return {
        "type": EXECUTE_AGENT,
        "request_id": request_id,
        "agent_source": agent_source,
        "task_payload": task_payload,
        "tool_set": tool_set,
        "limits": {**DEFAULT_LIMITS, **(limits or {})},
        "repeat_index": repeat_index,
    }


def fm_query_frame(
    request_id: str,
    call_seq: int,
    system_prompt: str,
    user_prompt: str,
    temperature: float,
    expected_fields: list[str],
    model_id: str,
) -> dict[str, Any]:
    return {
        "type": FM_QUERY,
        "request_id": request_id,
        "call_seq": call_seq,
        "system_prompt": system_prompt,
        "user_prompt": user_prompt,
        "temperature": temperature,
        "expected_fields": list(expected_fields),
        "model_id": model_id,
    }


def fm_result_frame(
    request_id: str,
    call_seq: int,
    fields: dict[str, str] | None = None,
    error: dict[str, str] | None = None,
) -> dict[str, Any]:
    frame: dict[str, Any] = {"type": FM_RESULT, "request_id": request_id, "call_seq": call_seq}
    if error is not None:
        frame["error"] = error
    else:
        frame["fields"] = fields or {}
    return frame


def done_frame(
    request_id: str,
    status: str,
    answer: dict[str, Any] | None = None,
    traceback_text: str | None = None,
    counters: dict[str, Any] | None = None,
) -> dict[str, Any]:
    frame: dict[str, Any] = {
        "type": DONE,
        "request_id": request_id,
        "status": status,
        "counters": counters or {},
    }
    if status == STATUS_OK:
        frame["answer"] = answer
    else:
        frame["traceback"] = traceback_text or ""
    return frame


def ping_frame(seq: int) -> dict[str, Any]:
    return {"type": PING, "seq": seq}


def pong_frame(seq: int) -> dict[str, Any]:
    return {"type": PONG, "seq": seq}
