"""Harness for driving a live worker subprocess over its stdio wire."""
import json
import queue
import subprocess
import sys
import threading
import time

import pytest

WORKER_COMMAND = [sys.executable, "-m", "forgeworker"]

DEFAULT_TOOL_SET = {"default_model_id": "stub-model", "answer_kind": "text", "rng_seed": 0}


def encode(frame):
    return json.dumps(frame, ensure_ascii=False, separators=(",", ":")) + "\n"


def _echo_fields(query):
    return {name: "ok" for name in query["expected_fields"]}


class WorkerProcess:
    """One worker subprocess: handshake on construction, then frame-level I/O."""

    def __init__(self):
        self.proc = subprocess.Popen(
            WORKER_COMMAND,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            bufsize=1,
            encoding="utf-8",
        )
        self.frames = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        hello = self.recv(10.0)
        assert hello is not None and hello["type"] == "hello", f"no hello: {hello!r}"
        assert hello["protocol_version"] == 1
        self.send({"type": "hello_ack", "protocol_version": 1})

    def _pump(self):
        for line in self.proc.stdout:
            line = line.strip()
            if line:
                self.frames.put(json.loads(line))
        self.frames.put(None)

    def send(self, frame):
        self.proc.stdin.write(encode(frame))
        self.proc.stdin.flush()

    def recv(self, timeout=15.0):
        try:
            return self.frames.get(timeout=timeout)
        except queue.Empty:
            return None

    def execute(
        self,
        agent_source,
        task_payload="the task",
        tool_set=None,
        limits=None,
        responder=None,
        request_id="req-0",
        deadline=30.0,
    ):
        """Send one execute_agent and pump fm queries until the done frame.

        responder(query_frame) returns the fields dict for one fm_query (or
        {"__error__": {...}} to answer with an error result); the default
        echoes "ok" into every expected field. Returns (done, queries).
        """
        self.send(
            {
                "type": "execute_agent",
                "request_id": request_id,
                "agent_source": agent_source,
                "task_payload": task_payload,
                "tool_set": dict(DEFAULT_TOOL_SET) if tool_set is None else tool_set,
                "limits": limits or {},
                "repeat_index": 0,
            }
        )
        queries = []
        end = time.monotonic() + deadline
        while True:
            remaining = end - time.monotonic()
            assert remaining > 0, f"no done frame within {deadline}s ({len(queries)} queries served)"
            frame = self.recv(timeout=remaining)
            assert frame is not None, "worker hung up before finishing the request"
            if frame["type"] == "fm_query":
                queries.append(frame)
                fields = (responder or _echo_fields)(frame)
                result = {"type": "fm_result", "request_id": frame["request_id"], "call_seq": frame["call_seq"]}
                if isinstance(fields, dict) and "__error__" in fields:
                    result["error"] = fields["__error__"]
                else:
                    result["fields"] = fields
                self.send(result)
            elif frame["type"] == "done":
                return frame, queries

    def close(self):
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=3.0)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait(timeout=3.0)


@pytest.fixture
def worker():
    proc = WorkerProcess()
    yield proc
    proc.close()


@pytest.fixture
def worker_factory():
    """Spawn any number of worker processes; all are closed at teardown."""
    spawned = []

    def make():
        proc = WorkerProcess()
        spawned.append(proc)
        return proc

    yield make
    for proc in spawned:
        proc.close()
