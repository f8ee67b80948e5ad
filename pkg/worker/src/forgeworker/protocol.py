"""Frame vocabulary for the stdio wire protocol.

One JSON object per line, UTF-8. Unknown frame fields are ignored so either
side can grow the protocol without breaking the other; the version is
negotiated once with hello/hello_ack.
"""
from __future__ import annotations

import json
from typing import Any

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


class ProtocolError(ValueError):
    """A line on the pipe that is not a usable frame."""


def encode_frame(frame: dict[str, Any]) -> str:
    return json.dumps(frame, ensure_ascii=False, separators=(",", ":")) + "\n"


def decode_frame(line: str) -> dict[str, Any]:
    try:
        frame = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"bad frame: {exc}: {line[:200]!r}") from exc
    if not isinstance(frame, dict) or "type" not in frame:
        raise ProtocolError(f"frame without a type: {line[:200]!r}")
    return frame


def hello_frame(version: int = PROTOCOL_VERSION) -> dict[str, Any]:
    return {"type": HELLO, "protocol_version": version}


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


def pong_frame(seq: int) -> dict[str, Any]:
    return {"type": PONG, "seq": seq}
