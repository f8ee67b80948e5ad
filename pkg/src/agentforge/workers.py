"""Orchestrator-side worker clients and the execute/query frame pump.

Two interchangeable clients speak the wire protocol: an in-process worker
(tests and stub deployments; real threads, real frames, no sandbox) and a
subprocess client that drives the out-of-process worker package with
heartbeats and recycling.
"""
from __future__ import annotations

import itertools
import logging
import queue
import subprocess
import threading
import time
from typing import Any, Callable, Optional

from . import protocol
from .errors import WorkerError
from .framework import ExecutionContext, FmQueryFailed, execute_forward, prepare_task

logger = logging.getLogger(__name__)

FmHandler = Callable[[dict[str, Any]], dict[str, str]]

HEARTBEAT_INTERVAL = 5.0
RECV_GRACE_SECONDS = 5.0


class InProcessWorker:
    """Runs agent code on a thread in this process, speaking real frames.

    Satisfies the wire protocol without process isolation; resource limits are
    enforced cooperatively (call budget strictly, wall clock at call
    boundaries).
    """

    def __init__(self):
        self._to_orchestrator: "queue.Queue[dict[str, Any]]" = queue.Queue()
        self._fm_results: "queue.Queue[dict[str, Any]]" = queue.Queue()
        self._thread: Optional[threading.Thread] = None
        self.executions = 0

    def send(self, frame: dict[str, Any]) -> None:
        kind = frame.get("type")
        if kind == protocol.EXECUTE_AGENT:
            self.executions += 1
            self._thread = threading.Thread(target=self._execute, args=(frame,), daemon=True)
            self._thread.start()
        elif kind == protocol.FM_RESULT:
            self._fm_results.put(frame)
        elif kind == protocol.PING:
            self._to_orchestrator.put(protocol.pong_frame(frame.get("seq", 0)))
        # hello_ack and unknown frames are ignored (forward compatibility)

    def recv(self, timeout: float) -> Optional[dict[str, Any]]:
        try:
            return self._to_orchestrator.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        pass

    def alive(self) -> bool:
        return True

    def _execute(self, frame: dict[str, Any]) -> None:
        request_id = frame["request_id"]
        limits = frame.get("limits", {})
        tool_set = frame.get("tool_set", {})
        task_text, examples, test_input = prepare_task(frame.get("task_payload"))
        call_seq = itertools.count(0)
        wall_seconds = float(limits.get("wall_seconds", protocol.DEFAULT_LIMITS["wall_seconds"]))

        def channel(
            system_prompt: str, user_prompt: str, temperature: float, fields: list[str], model_id: str
        ) -> dict[str, str]:
            seq = next(call_seq)
            self._to_orchestrator.put(
                protocol.fm_query_frame(
                    request_id, seq, system_prompt, user_prompt, temperature, fields, model_id
                )
            )
            try:
                result = self._fm_results.get(timeout=wall_seconds + 30.0)
            except queue.Empty as exc:
                raise FmQueryFailed("orchestrator never answered the model query") from exc
            if "error" in result:
                err = result["error"]
                raise FmQueryFailed(f"{err.get('kind', 'error')}: {err.get('message', '')}")
            return dict(result.get("fields", {}))

        ctx = ExecutionContext(
            query_channel=channel,
            default_model_id=tool_set.get("default_model_id", ""),
            answer_kind=tool_set.get("answer_kind", "text"),
            debate_roles=tool_set.get("debate_roles"),
            role_set=tool_set.get("role_set"),
            examples=examples,
            test_input=test_input,
            rng_seed=int(tool_set.get("rng_seed", 0)),
            max_model_calls=int(limits.get("max_model_calls", protocol.DEFAULT_LIMITS["max_model_calls"])),
            wall_seconds=wall_seconds,
            allow_model_override=bool(tool_set.get("allow_model_override", False)),
        )
        result = execute_forward(frame.get("agent_source", ""), task_text, ctx)
        self._to_orchestrator.put(
            protocol.done_frame(
                request_id,
                result["status"],
                answer=result.get("answer"),
                traceback_text=result.get("traceback"),
                counters=result.get("counters"),
            )
        )


class SubprocessWorker:
    """One out-of-process worker over stdio pipes, with heartbeat monitoring."""

    def __init__(self, command: list[str], heartbeat_interval: float = HEARTBEAT_INTERVAL):
        self.command = list(command)
        self.executions = 0
        self._send_lock = threading.Lock()
        self._incoming: "queue.Queue[Optional[dict[str, Any]]]" = queue.Queue()
        self._missed_pongs = 0
        self._dead = False
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self._handshake()
        self._ping_seq = itertools.count(0)
        self._awaiting_pong: set[int] = set()
        self._hb_stop = threading.Event()
        self._heartbeat = threading.Thread(target=self._heartbeat_loop, args=(heartbeat_interval,), daemon=True)
        self._heartbeat.start()

    def _handshake(self) -> None:
        frame = self.recv(timeout=10.0)
        if frame is None or frame.get("type") != protocol.HELLO:
            self.close()
            raise WorkerError(f"worker did not say hello: {frame!r}")
        version = int(frame.get("protocol_version", 0))
        if version != protocol.PROTOCOL_VERSION:
            self.close()
            raise WorkerError(f"unsupported worker protocol version {version}")
        self.send(protocol.hello_ack_frame())

    def _read_loop(self) -> None:
        try:
            assert self._proc.stdout is not None
            for line in self._proc.stdout:
                line = line.strip()
                if not line:
                    continue
                try:
                    frame = protocol.decode_frame(line)
                except Exception:  # noqa: BLE001 - garbage on the pipe kills the worker
                    logger.warning("undecodable frame from worker: %r", line[:200])
                    continue
                if frame.get("type") == protocol.PONG:
                    self._awaiting_pong.discard(frame.get("seq"))
                    self._missed_pongs = 0
                    continue
                self._incoming.put(frame)
        finally:
            self._incoming.put(None)

    def _heartbeat_loop(self, interval: float) -> None:
        while not self._hb_stop.wait(interval):
            if self._awaiting_pong:
                self._missed_pongs += 1
                if self._missed_pongs >= 2:
                    logger.error("worker missed 2 heartbeats; killing")
                    self._dead = True
                    self._proc.kill()
                    return
            seq = next(self._ping_seq)
            self._awaiting_pong.add(seq)
            try:
                self.send(protocol.ping_frame(seq))
            except WorkerError:
                self._dead = True
                return

    def send(self, frame: dict[str, Any]) -> None:
        if frame.get("type") == protocol.EXECUTE_AGENT:
            self.executions += 1
        line = protocol.encode_frame(frame)
        with self._send_lock:
            if self._proc.stdin is None or self._proc.poll() is not None:
                raise WorkerError("worker process is gone")
            try:
                self._proc.stdin.write(line)
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                self._dead = True
                raise WorkerError(f"worker pipe broken: {exc}") from exc

    def recv(self, timeout: float) -> Optional[dict[str, Any]]:
        try:
            frame = self._incoming.get(timeout=timeout)
        except queue.Empty:
            return None
        return frame  # None sentinel = EOF

    def alive(self) -> bool:
        return not self._dead and self._proc.poll() is None

    def close(self) -> None:
        self._hb_stop.set()
        self._dead = True
        try:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
        except OSError:
            pass
        self._proc.terminate()
        try:
            self._proc.wait(timeout=3.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()


def run_agent_execution(
    worker: Any,
    request: dict[str, Any],
    fm_handler: FmHandler,
    on_query: Optional[Callable[[dict[str, Any]], None]] = None,
) -> dict[str, Any]:
    """Drive one execute_agent request to its done frame.

    Answers every fm_query through fm_handler (gateway errors travel back to
    the agent as error results); a silent or dead worker becomes a synthetic
    timeout/error done frame rather than an exception.
    """
    request_id = request["request_id"]
    wall = float(request.get("limits", {}).get("wall_seconds", protocol.DEFAULT_LIMITS["wall_seconds"]))
    deadline = time.monotonic() + wall + RECV_GRACE_SECONDS
    try:
        worker.send(request)
    except WorkerError as exc:
        return protocol.done_frame(request_id, protocol.STATUS_ERROR, traceback_text=str(exc))
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            worker.close()
            return protocol.done_frame(
                request_id, protocol.STATUS_TIMEOUT, traceback_text=f"no result within {wall}s wall limit"
            )
        frame = worker.recv(timeout=min(remaining, 1.0))
        if frame is None:
            if not worker.alive():
                return protocol.done_frame(
                    request_id, protocol.STATUS_ERROR, traceback_text="worker terminated mid-execution"
                )
            continue
        kind = frame.get("type")
        if kind == protocol.FM_QUERY and frame.get("request_id") == request_id:
            if on_query is not None:
                on_query(frame)
            try:
                fields = fm_handler(frame)
            except Exception as exc:  # noqa: BLE001 - surfaced to the agent, not the loop
                worker.send(
                    protocol.fm_result_frame(
                        request_id,
                        frame.get("call_seq", -1),
                        error={"kind": type(exc).__name__, "message": str(exc)},
                    )
                )
                continue
            worker.send(protocol.fm_result_frame(request_id, frame.get("call_seq", -1), fields=fields))
        elif kind == protocol.DONE and frame.get("request_id") == request_id:
            return frame
        else:
            logger.debug("ignoring frame %s during execution", kind)


class WorkerPool:
    """Bounded pool of workers; stub workers are created per execution."""

    def __init__(
        self,
        kind: str = "stub",
        command: Optional[list[str]] = None,
        size: int = 8,
        recycle_after: int = 50,
    ):
        if kind not in ("stub", "subprocess"):
            raise WorkerError(f"unknown worker kind {kind!r}")
        if kind == "subprocess" and not command:
            raise WorkerError("subprocess workers need a command")
        self.kind = kind
        self.command = command
        self.size = size
        self.recycle_after = recycle_after
        self._idle: "queue.Queue[Any]" = queue.Queue()
        self._created = 0
        self._lock = threading.Lock()

    def _checkout(self) -> Any:
        if self.kind == "stub":
            return InProcessWorker()
        while True:
            try:
                worker = self._idle.get_nowait()
            except queue.Empty:
                with self._lock:
                    if self._created < self.size:
                        self._created += 1
                        return SubprocessWorker(self.command)  # type: ignore[arg-type]
                worker = self._idle.get()
            if worker.alive():
                return worker
            with self._lock:
                self._created -= 1

    def _checkin(self, worker: Any) -> None:
        if self.kind == "stub":
            return
        if not worker.alive() or worker.executions >= self.recycle_after:
            worker.close()
            with self._lock:
                self._created -= 1
            return
        self._idle.put(worker)

    def execute(
        self,
        request: dict[str, Any],
        fm_handler: FmHandler,
        on_query: Optional[Callable[[dict[str, Any]], None]] = None,
    ) -> dict[str, Any]:
        worker = self._checkout()
        try:
            return run_agent_execution(worker, request, fm_handler, on_query=on_query)
        finally:
            self._checkin(worker)

    def close(self) -> None:
        while True:
            try:
                worker = self._idle.get_nowait()
            except queue.Empty:
                return
            worker.close()
