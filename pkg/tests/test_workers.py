"""Wire protocol frames and the execute/query pump over the stub worker."""
import pytest

from agentforge import protocol
from agentforge.errors import ParseError, WorkerError
from agentforge.workers import InProcessWorker, WorkerPool, run_agent_execution

ECHO_AGENT = (
    "def forward(self, taskInfo):\n"
    "    module = FMModule(['answer'], 'Echo')\n"
    "    (answer,) = module([taskInfo], 'echo the task')\n"
    "    return answer\n"
)

NO_CALL_AGENT = "def forward(self, taskInfo):\n    return 'static answer'"


def execute_request(agent_source, request_id="req-1", limits=None, tool_set=None):
    return protocol.execute_agent_frame(
        request_id=request_id,
        agent_source=agent_source,
        task_payload="the task payload",
        tool_set={"default_model_id": "eval-default", **(tool_set or {})},
        limits=limits,
    )


def answering_handler(frame):
    return {field: f"reply to call {frame['call_seq']}" for field in frame["expected_fields"]}


# -- frames ----------------------------------------------------------------


def test_frame_round_trip():
    frame = protocol.fm_query_frame("r", 3, "sys", "user", 0.8, ["a", "b"], "m")
    assert protocol.decode_frame(protocol.encode_frame(frame)) == frame


def test_encoded_frames_are_single_lines():
    frame = protocol.execute_agent_frame("r", "code\nwith\nnewlines", "payload", {})
    encoded = protocol.encode_frame(frame)
    assert encoded.endswith("\n") and encoded.count("\n") == 1


def test_decode_rejects_garbage_and_typeless_frames():
    with pytest.raises(ParseError):
        protocol.decode_frame("{not json")
    with pytest.raises(ParseError):
        protocol.decode_frame('["no", "type"]')
    with pytest.raises(ParseError):
        protocol.decode_frame('{"request_id": "x"}')


def test_execute_frame_fills_default_limits():
    frame = protocol.execute_agent_frame("r", "code", "payload", {})
    assert frame["limits"]["wall_seconds"] == 120.0
    assert frame["limits"]["max_model_calls"] == 300
    override = protocol.execute_agent_frame("r", "code", "payload", {}, limits={"max_model_calls": 5})
    assert override["limits"]["max_model_calls"] == 5
    assert override["limits"]["wall_seconds"] == 120.0


def test_done_frame_shape_depends_on_status():
    ok = protocol.done_frame("r", protocol.STATUS_OK, answer={"content": "x"})
    assert "answer" in ok and "traceback" not in ok
    err = protocol.done_frame("r", protocol.STATUS_ERROR, traceback_text="boom")
    assert err["traceback"] == "boom" and "answer" not in err


# -- in-process worker, manual pump ----------------------------------------


def test_worker_emits_query_then_done():
    worker = InProcessWorker()
    worker.send(execute_request(ECHO_AGENT))
    query = worker.recv(timeout=5.0)
    assert query["type"] == protocol.FM_QUERY
    assert query["call_seq"] == 0
    assert query["expected_fields"] == ["answer"]
    assert query["model_id"] == "eval-default"
    worker.send(protocol.fm_result_frame("req-1", 0, fields={"answer": "hi"}))
    done = worker.recv(timeout=5.0)
    assert done["type"] == protocol.DONE
    assert done["status"] == protocol.STATUS_OK
    assert done["answer"]["content"] == "hi"
    assert done["counters"]["model_calls"] == 1


def test_worker_answers_ping_with_matching_seq():
    worker = InProcessWorker()
    worker.send(protocol.ping_frame(41))
    pong = worker.recv(timeout=5.0)
    assert pong == protocol.pong_frame(41)


def test_fm_error_result_reaches_agent_as_failure():
    worker = InProcessWorker()
    worker.send(execute_request(ECHO_AGENT))
    query = worker.recv(timeout=5.0)
    worker.send(
        protocol.fm_result_frame(
            "req-1", query["call_seq"], error={"kind": "SchemaError", "message": "no usable response"}
        )
    )
    done = worker.recv(timeout=5.0)
    assert done["status"] == protocol.STATUS_ERROR
    assert "no usable response" in done["traceback"]


# -- the pump --------------------------------------------------------------


def test_pump_runs_agent_to_completion():
    done = run_agent_execution(InProcessWorker(), execute_request(ECHO_AGENT), answering_handler)
    assert done["status"] == protocol.STATUS_OK
    assert done["answer"]["content"] == "reply to call 0"


def test_pump_without_model_calls():
    done = run_agent_execution(InProcessWorker(), execute_request(NO_CALL_AGENT), answering_handler)
    assert done["status"] == protocol.STATUS_OK
    assert done["answer"]["content"] == "static answer"
    assert done["counters"]["model_calls"] == 0


def test_pump_surfaces_handler_exception_to_the_agent():
    def broken_handler(frame):
        raise RuntimeError("gateway on fire")

    done = run_agent_execution(InProcessWorker(), execute_request(ECHO_AGENT), broken_handler)
    assert done["status"] == protocol.STATUS_ERROR
    assert "gateway on fire" in done["traceback"]


def test_pump_counts_queries_through_on_query():
    seen = []
    source = (
        "def forward(self, taskInfo):\n"
        "    module = FMModule(['answer'], 'Chatty')\n"
        "    for i in range(3):\n"
        "        module([taskInfo], 'again', i)\n"
        "    return 'done'\n"
    )
    done = run_agent_execution(
        InProcessWorker(), execute_request(source), answering_handler, on_query=seen.append
    )
    assert done["status"] == protocol.STATUS_OK
    assert [q["call_seq"] for q in seen] == [0, 1, 2]


def test_pump_times_out_on_silent_worker():
    class SilentWorker:
        def send(self, frame):
            pass

        def recv(self, timeout):
            return None

        def close(self):
            self.closed = True

        def alive(self):
            return True

    done = run_agent_execution(
        SilentWorker(), execute_request(ECHO_AGENT, limits={"wall_seconds": 0.2}), answering_handler
    )
    assert done["status"] == protocol.STATUS_TIMEOUT
    assert "wall limit" in done["traceback"]


def test_pump_reports_dead_worker_as_error():
    class DeadWorker:
        def send(self, frame):
            pass

        def recv(self, timeout):
            return None

        def alive(self):
            return False

        def close(self):
            pass

    done = run_agent_execution(DeadWorker(), execute_request(ECHO_AGENT), answering_handler)
    assert done["status"] == protocol.STATUS_ERROR
    assert "terminated" in done["traceback"]


def test_pump_reports_unsendable_request_as_error():
    class BrokenPipeWorker:
        def send(self, frame):
            raise WorkerError("pipe closed")

        def recv(self, timeout):
            return None

        def alive(self):
            return False

        def close(self):
            pass

    done = run_agent_execution(BrokenPipeWorker(), execute_request(ECHO_AGENT), answering_handler)
    assert done["status"] == protocol.STATUS_ERROR
    assert "pipe closed" in done["traceback"]


def test_budget_limit_travels_the_protocol():
    source = (
        "def forward(self, taskInfo):\n"
        "    module = FMModule(['answer'], 'Greedy')\n"
        "    for i in range(50):\n"
        "        module([taskInfo], 'more', i)\n"
        "    return 'never'\n"
    )
    done = run_agent_execution(
        InProcessWorker(),
        execute_request(source, limits={"max_model_calls": 4}),
        answering_handler,
    )
    assert done["status"] == protocol.STATUS_LIMIT
    assert done["counters"]["model_calls"] == 4


# -- pool ------------------------------------------------------------------


def test_stub_pool_executes():
    pool = WorkerPool(kind="stub")
    done = pool.execute(execute_request(ECHO_AGENT), answering_handler)
    assert done["status"] == protocol.STATUS_OK
    pool.close()


def test_pool_rejects_bad_configuration():
    with pytest.raises(WorkerError):
        WorkerPool(kind="quantum")
    with pytest.raises(WorkerError):
        WorkerPool(kind="subprocess", command=None)
