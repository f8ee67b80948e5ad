"""Scripted transcript replay: matching, consumption, faults, logical clock."""
import json

import httpx
import pytest

from agentforge.backends import LiveBackend, ScriptedBackend
from agentforge.errors import RateLimited, StateError, TransportError, ValidationError
from _helpers import write_jsonl


def backend_from(tmp_path, entries):
    return ScriptedBackend(write_jsonl(tmp_path / "script.jsonl", entries))


def test_first_unconsumed_match_wins_and_is_consumed(tmp_path):
    backend = backend_from(
        tmp_path,
        [
            {"match": {"user_contains": "alpha"}, "response": {"answer": "first"}},
            {"match": {"user_contains": "alpha"}, "response": {"answer": "second"}},
        ],
    )
    body1, _ = backend.send("m", "sys", "say alpha", 0.5, ("answer",))
    body2, _ = backend.send("m", "sys", "say alpha", 0.5, ("answer",))
    assert json.loads(body1)["answer"] == "first"
    assert json.loads(body2)["answer"] == "second"
    with pytest.raises(StateError):
        backend.send("m", "sys", "say alpha", 0.5, ("answer",))


def test_reusable_entry_serves_repeatedly(tmp_path):
    backend = backend_from(
        tmp_path, [{"match": {}, "response": {"answer": "evergreen"}, "reusable": True}]
    )
    for _ in range(5):
        body, _ = backend.send("m", "sys", "anything", 0.5, ("answer",))
        assert json.loads(body)["answer"] == "evergreen"


def test_matching_rules(tmp_path):
    backend = backend_from(
        tmp_path,
        [
            {
                "match": {
                    "model_id": "meta-default",
                    "expected_fields": ["thought", "name", "code"],
                    "system_contains": "helpful",
                    "user_contains": "archive",
                    "user_suffix": "THE BOX.",
                },
                "response": {"thought": "t", "name": "n", "code": "c"},
                "reusable": True,
            }
        ],
    )
    fields = ("thought", "name", "code")
    ok = backend.send("meta-default", "a helpful bot", "the archive ... THINK OUTSIDE THE BOX.\n", 0.5, fields)
    assert json.loads(ok[0])["name"] == "n"
    # Each rule must hold: wrong model, wrong fields, missing suffix all miss.
    with pytest.raises(StateError):
        backend.send("other-model", "a helpful bot", "archive THE BOX.", 0.5, fields)
    with pytest.raises(StateError):
        backend.send("meta-default", "a helpful bot", "archive THE BOX.", 0.5, ("answer",))
    with pytest.raises(StateError):
        backend.send("meta-default", "a helpful bot", "the archive, but no tail", 0.5, fields)


def test_fault_entries_raise_once_then_fall_through(tmp_path):
    backend = backend_from(
        tmp_path,
        [
            {"match": {}, "fault": "rate_limit"},
            {"match": {}, "response": {"answer": "after backoff"}},
        ],
    )
    with pytest.raises(RateLimited):
        backend.send("m", "s", "u", 0.5, ("answer",))
    body, _ = backend.send("m", "s", "u", 0.5, ("answer",))
    assert json.loads(body)["answer"] == "after backoff"


def test_transport_fault(tmp_path):
    backend = backend_from(tmp_path, [{"match": {}, "fault": "transport"}])
    with pytest.raises(TransportError):
        backend.send("m", "s", "u", 0.5, ("answer",))


def test_entry_needs_some_outcome(tmp_path):
    with pytest.raises(ValidationError):
        backend_from(tmp_path, [{"match": {"user_contains": "x"}}])


def test_raw_body_passthrough(tmp_path):
    backend = backend_from(
        tmp_path, [{"match": {}, "raw": "```json\n{\"answer\": \"fenced\"}\n```"}]
    )
    body, _ = backend.send("m", "s", "u", 0.5, ("answer",))
    assert body.startswith("```json")


def test_logical_clock_ticks_once_per_request(tmp_path):
    backend = backend_from(
        tmp_path, [{"match": {}, "response": {"answer": "x"}, "reusable": True}]
    )
    assert backend.now() == 0.0
    backend.send("m", "s", "u", 0.5, ("answer",))
    backend.send("m", "s", "u", 0.5, ("answer",))
    assert backend.now() == 2.0


def test_state_round_trip_restores_consumption(tmp_path):
    entries = [
        {"match": {}, "response": {"answer": "one"}},
        {"match": {}, "response": {"answer": "two"}},
    ]
    backend = backend_from(tmp_path, entries)
    backend.send("m", "s", "u", 0.5, ("answer",))
    saved = backend.state()

    fresh = backend_from(tmp_path, entries)
    fresh.restore(saved)
    assert fresh.now() == 1.0
    body, _ = fresh.send("m", "s", "u", 0.5, ("answer",))
    assert json.loads(body)["answer"] == "two"


# -- live backend over a mock transport ------------------------------------


def live_backend(handler):
    return LiveBackend(
        base_url="https://fm.example/v1",
        api_key="k",
        transport=httpx.MockTransport(handler),
    )


def test_live_backend_parses_chat_completion():
    def handler(request):
        payload = json.loads(request.content)
        assert payload["model"] == "m1"
        assert payload["messages"][0]["role"] == "system"
        return httpx.Response(
            200,
            json={
                "choices": [{"message": {"content": "{\"answer\": \"ok\"}"}}],
                "usage": {"prompt_tokens": 10, "completion_tokens": 3},
            },
        )

    backend = live_backend(handler)
    body, usage = backend.send("m1", "sys", "user", 0.5, ("answer",))
    assert json.loads(body)["answer"] == "ok"
    assert usage == {"prompt_tokens": 10, "completion_tokens": 3}
    backend.close()


def test_live_backend_maps_429_to_rate_limited_with_retry_after():
    def handler(request):
        return httpx.Response(429, headers={"Retry-After": "9"}, json={})

    backend = live_backend(handler)
    with pytest.raises(RateLimited) as exc_info:
        backend.send("m1", "sys", "user", 0.5, ("answer",))
    assert exc_info.value.retry_after == 9.0
    backend.close()


def test_live_backend_maps_500_to_retryable_and_400_to_transport():
    codes = iter([503, 400])

    def handler(request):
        return httpx.Response(next(codes), json={})

    backend = live_backend(handler)
    with pytest.raises(RateLimited):
        backend.send("m1", "sys", "user", 0.5, ("answer",))
    with pytest.raises(TransportError):
        backend.send("m1", "sys", "user", 0.5, ("answer",))
    backend.close()
