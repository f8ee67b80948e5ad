"""Stdio entry point: one worker process serving execute_agent requests.

The main thread runs agent code so the wall-clock alarm can interrupt even a
tight loop; a reader thread pumps stdin and answers pings immediately, which
keeps heartbeats alive during long executions. Frames go out through a
private duplicate of the original stdout, and sys.stdout is pointed at
stderr before any agent code runs, so stray prints can never corrupt the
wire.
"""
from __future__ import annotations

import itertools
import os
import queue
import sys
import threading
import traceback
from typing import Any, Optional, TextIO

from . import framework, protocol, sandbox


class Wire:
    """Locked line writer over the frame stream."""

    def __init__(self, stream: TextIO):
        self._stream = stream
        self._lock = threading.Lock()

    def send(self, frame: dict[str, Any]) -> None:
        line = protocol.encode_frame(frame)
        with self._lock:
            self._stream.write(line)
            self._stream.flush()


def _read_loop(
    stdin: TextIO,
    requests: "queue.Queue[Optional[dict[str, Any]]]",
    fm_results: "queue.Queue[dict[str, Any]]",
    wire: Wire,
) -> None:
    try:
        for raw in stdin:
            line = raw.strip()
            if not line:
                continue
            try:
                frame = protocol.decode_frame(line)
            except protocol.ProtocolError as exc:
                print(f"forgeworker: dropping undecodable frame: {exc}", file=sys.stderr)
                continue
            kind = frame.get("type")
            if kind == protocol.PING:
                wire.send(protocol.pong_frame(frame.get("seq", 0)))
            elif kind == protocol.FM_RESULT:
                fm_results.put(frame)
            elif kind == protocol.EXECUTE_AGENT:
                requests.put(frame)
            # hello_ack and unknown frames are ignored (forward compatibility)
    finally:
        requests.put(None)  # EOF: orchestrator hung up


def handle_execute(
    frame: dict[str, Any], fm_results: "queue.Queue[dict[str, Any]]", wire: Wire
) -> None:
    request_id = frame.get("request_id", "")
    limits = {**protocol.DEFAULT_LIMITS, **(frame.get("limits") or {})}
    tool_set = frame.get("tool_set") or {}
    task_text, examples, test_input = framework.prepare_task(frame.get("task_payload"))
    call_seq = itertools.count(0)
    wall_seconds = float(limits["wall_seconds"])

    def channel(
        system_prompt: str, user_prompt: str, temperature: float, fields: list, model_id: str
    ) -> dict[str, str]:
        seq = next(call_seq)
        wire.send(
            protocol.fm_query_frame(
                request_id, seq, system_prompt, user_prompt, temperature, fields, model_id
            )
        )
        try:
            result = fm_results.get(timeout=wall_seconds + 30.0)
        except queue.Empty as exc:
            raise framework.FmQueryFailed("orchestrator never answered the model query") from exc
        if "error" in result:
            err = result["error"]
            raise framework.FmQueryFailed(f"{err.get('kind', 'error')}: {err.get('message', '')}")
        return dict(result.get("fields", {}))

    ctx = framework.ExecutionContext(
        query_channel=channel,
        default_model_id=tool_set.get("default_model_id", ""),
        answer_kind=tool_set.get("answer_kind", "text"),
        debate_roles=tool_set.get("debate_roles"),
        role_set=tool_set.get("role_set"),
        examples=examples,
        test_input=test_input,
        rng_seed=int(tool_set.get("rng_seed", 0)),
        max_model_calls=int(limits["max_model_calls"]),
        wall_seconds=wall_seconds,
        allow_model_override=bool(tool_set.get("allow_model_override", False)),
    )
    previous_limit = sandbox.set_memory_limit(int(limits["memory_bytes"]))
    sandbox.arm_wall_clock(wall_seconds)
    try:
        try:
            result = framework.execute_forward(
                frame.get("agent_source", ""),
                task_text,
                ctx,
                builtins_override=sandbox.restricted_builtins(),
            )
        finally:
            sandbox.disarm_wall_clock()
            sandbox.clear_memory_limit(previous_limit)
    except framework.WallClockExceeded:
        # The alarm fired in the gap after forward's own guard; still a timeout.
        result = {
            "status": protocol.STATUS_TIMEOUT,
            "traceback": traceback.format_exc(),
            "counters": {"model_calls": ctx.model_calls, "wall_time": ctx.clock() - ctx.started},
        }
    wire.send(
        protocol.done_frame(
            request_id,
            result["status"],
            answer=result.get("answer"),
            traceback_text=result.get("traceback"),
            counters=result.get("counters"),
        )
    )


def main(argv: Optional[list] = None) -> int:
    sandbox.disable_network()
    wire = Wire(os.fdopen(os.dup(sys.stdout.fileno()), "w", buffering=1, encoding="utf-8"))
    sys.stdout = sys.stderr  # stray prints must never touch the frame stream
    try:
        sys.stdin.reconfigure(encoding="utf-8")  # type: ignore[union-attr]
    except (AttributeError, ValueError):
        pass
    requests: "queue.Queue[Optional[dict[str, Any]]]" = queue.Queue()
    fm_results: "queue.Queue[dict[str, Any]]" = queue.Queue()
    reader = threading.Thread(
        target=_read_loop, args=(sys.stdin, requests, fm_results, wire), daemon=True
    )
    reader.start()
    wire.send(protocol.hello_frame())
    while True:
        request = requests.get()
        if request is None:
            return 0
        try:
            handle_execute(request, fm_results, wire)
        except Exception:  # noqa: BLE001 - one bad request must not kill the worker
            wire.send(
                protocol.done_frame(
                    request.get("request_id", ""),
                    protocol.STATUS_ERROR,
                    traceback_text=traceback.format_exc(),
                )
            )


if __name__ == "__main__":
    sys.exit(main())
