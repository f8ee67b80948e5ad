"""The subprocess runtime must be indistinguishable from the in-process stub.

Same candidate, same tasks, same seeds: both worker kinds must make the model
see byte-identical prompts (module ids come from the per-execution rng, so
any drift in rng consumption shows up here) and produce identical scores.
"""
import json

from agentforge.backends import ScriptedBackend
from agentforge.domains import DomainSpec, TaskInstance
from agentforge.evaluate import Evaluator
from agentforge.gateway import FmGateway
from agentforge.seeds import load_seed
from agentforge.workers import WorkerPool

WORKER_COMMAND = ["python3", "-m", "forgeworker"]

QA_DOMAIN = DomainSpec(
    domain_id="parity_qa", family="qa", scorer="exact_match_text", validation_size=1, test_size=1
)
QA_TASKS = [
    TaskInstance(task_id=f"qa-{i}", payload=f"Repeat the word 'ready' (case {i}).", gold="ready")
    for i in range(2)
]
QA_SCRIPT = [
    {
        "match": {"expected_fields": ["thinking", "answer"]},
        "response": {"thinking": "step by step", "answer": "ready"},
        "reusable": True,
    },
    {
        "match": {"expected_fields": ["feedback", "correct"]},
        "response": {"feedback": "re-derive the result", "correct": "False"},
        "reusable": True,
    },
]

GRID_DOMAIN = DomainSpec(
    domain_id="parity_grid", family="arc", scorer="exact_match_grid", validation_size=1, test_size=1
)
GRID_TASKS = [
    TaskInstance(
        task_id=f"grid-{i}",
        payload={
            "examples": [{"input": [[i, 1], [2, 3]], "output": [[i, 1], [2, 3]]}],
            "test_input": [[i, 4]],
        },
        gold=[[i, 4]],
    )
    for i in range(2)
]
GRID_SCRIPT = [
    {
        "match": {"expected_fields": ["thinking", "code"]},
        "response": {"thinking": "it is the identity", "code": "def transform(grid):\n    return grid"},
        "reusable": True,
    }
]


def run_once(tmp_path, kind, label, domain, tasks, script, candidate):
    script_path = tmp_path / f"script-{label}.jsonl"
    script_path.write_text(
        "".join(json.dumps(entry) + "\n" for entry in script), encoding="utf-8"
    )
    backend = ScriptedBackend(script_path)
    pool = WorkerPool(kind=kind, command=WORKER_COMMAND if kind == "subprocess" else None, size=2)
    evaluator = Evaluator(
        domain=domain,
        gateway=FmGateway(backend),
        pool=pool,
        model_id="eval-default",
        run_seed=11,
        concurrency=2,
    )
    try:
        report = evaluator.evaluate(candidate, tasks, split="validation", repeats=1, mode="search")
    finally:
        pool.close()
    return report, backend.served


def served_key(entry):
    return (
        entry["system_prompt"],
        entry["user_prompt"],
        tuple(entry["expected_fields"]),
        entry["model_id"],
        entry["temperature"],
    )


def test_self_refine_prompts_are_identical_across_runtimes(tmp_path):
    candidate = load_seed("self_refine", family="qa")
    stub_report, stub_served = run_once(tmp_path, "stub", "stub-qa", QA_DOMAIN, QA_TASKS, QA_SCRIPT, candidate)
    sub_report, sub_served = run_once(
        tmp_path, "subprocess", "sub-qa", QA_DOMAIN, QA_TASKS, QA_SCRIPT, candidate
    )
    # The critic never approves, so each task runs all five refinement rounds
    # and the refine prompts quote rng-named modules ("Chain-of-Thought xYz1").
    assert len(stub_served) == len(sub_served) == 20
    assert sorted(map(served_key, stub_served)) == sorted(map(served_key, sub_served))
    assert stub_report.scores == sub_report.scores == (1.0, 1.0)


def test_grid_task_rendering_is_identical_across_runtimes(tmp_path):
    candidate = load_seed("cot", family="arc")
    stub_report, stub_served = run_once(
        tmp_path, "stub", "stub-grid", GRID_DOMAIN, GRID_TASKS, GRID_SCRIPT, candidate
    )
    sub_report, sub_served = run_once(
        tmp_path, "subprocess", "sub-grid", GRID_DOMAIN, GRID_TASKS, GRID_SCRIPT, candidate
    )
    assert len(stub_served) == len(sub_served) == 2
    assert sorted(map(served_key, stub_served)) == sorted(map(served_key, sub_served))
    assert "## Examples:" in stub_served[0]["user_prompt"]
    assert stub_report.scores == sub_report.scores == (1.0, 1.0)
