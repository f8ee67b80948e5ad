"""End-to-end acceptance gate.

One test (or parametrized group) per promised behavior, each self-contained:
its own task data, scripted transcripts, and frozen expected values. These
deliberately re-assert a few goldens that also live in the unit modules so
the gate stands on its own.
"""
import hashlib
import json
import time
from pathlib import Path

import pytest

from agentforge import events as ev
from agentforge.bootstrap import bootstrap_ci
from agentforge.domains import get_domain, load_domain
from agentforge.framework import ExecutionContext, execute_forward
from agentforge.records import EvalReport, archive_to_dict
from agentforge.scoring import score_exact_match, score_token_f1
from agentforge.search import run_search
from agentforge.seeds import default_seed_order, load_seed
from agentforge.tables import format_cell

from _oracles import binary_vectors, exhaustive_bootstrap_bounds
from _helpers import toy_script_entries, write_jsonl

ALWAYS_RAISING = "def forward(self, taskInfo):\n    raise KeyError(0)"

DEBUG_ENTRY = {
    "match": {"expected_fields": ["thought", "debug_thought", "name", "code"]},
    "response": {
        "thought": "t",
        "debug_thought": "same approach again",
        "name": "Doomed",
        "code": ALWAYS_RAISING,
    },
    "usage": {"prompt_tokens": 500, "completion_tokens": 120},
    "reusable": True,
}


def read_events(run_dir):
    path = Path(run_dir) / "events.jsonl"
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


# -- P1: deterministic end-to-end search on the toy domain ------------------


def test_p1_scripted_search_is_fast_bounded_and_reproducible(make_config, tmp_path):
    archive_bytes = []
    for run_name in ("first", "second"):
        config = make_config(run_dir=str(tmp_path / run_name))
        assert config.resolved_seeds(get_domain("toy_grid")) == default_seed_order("arc")
        assert len(default_seed_order("arc")) == 5
        started = time.monotonic()
        result = run_search(config)
        assert time.monotonic() - started < 60.0
        assert result.stop_reason == "completed"
        assert 5 <= len(result.archive) <= 10
        generations = result.archive.generations()
        assert all(later > earlier for earlier, later in zip(generations, generations[1:]))
        for entry in result.archive.entries:
            if entry.candidate.origin != "seed":
                assert entry.report is not None
                assert entry.report.split == "validation"
        archive_bytes.append((tmp_path / run_name / "archive.json").read_bytes())
    assert hashlib.sha256(archive_bytes[0]).hexdigest() == hashlib.sha256(archive_bytes[1]).hexdigest()


# -- P2: sampled bootstrap against exhaustive enumeration -------------------


def test_p2_bootstrap_ci_tracks_the_exhaustive_oracle():
    for scores in binary_vectors(6):
        exact_low, exact_high = exhaustive_bootstrap_bounds(scores)
        low, high = bootstrap_ci(scores, resamples=10_000, seed=2024)
        if len(set(scores)) == 1:
            mean = float(scores[0])
            assert (low, high) == (mean, mean)  # zero variance: exact, width 0
            assert (exact_low, exact_high) == (mean, mean)
        else:
            assert abs(low - exact_low) <= 0.02, scores
            assert abs(high - exact_high) <= 0.02, scores


# -- P3: scorer goldens -----------------------------------------------------

TOKEN_F1_CASES = [
    ("Pakistanis and Filipinos", ["Pakistanis and Filipinos"], 1.0),
    ("Pakistanis", ["Pakistanis and Filipinos"], 0.5),
    ("The quick brown fox", ["quick brown fox"], 1.0),
    ("fox brown quick", ["quick brown fox"], 1.0),
    ("six", ["six years", "6"], 2 / 3),
    ("", ["x"], 0.0),
    ("new york city", ["New York"], 0.8),
    ("a dog.", ["dog"], 1.0),
    ("touchdown pass", ["touchdown run"], 0.5),
    ("forty two", ["42"], 0.0),
]


def test_p3_hand_computed_scorer_values():
    for prediction, gold, expected in TOKEN_F1_CASES:
        assert score_token_f1(prediction, gold) == pytest.approx(expected, abs=1e-12), prediction
    assert score_exact_match("[[1, 2], [3, 4]]", [[1, 2], [3, 4]], "grid") == 1.0
    assert score_exact_match("[[1, 2], [3, 5]]", [[1, 2], [3, 4]], "grid") == 0.0
    assert score_exact_match("so the total is 348.", "348", "number") == 1.0
    assert score_exact_match("The answer is (C).", "C", "choice") == 1.0
    assert score_exact_match("  New   York ", "new york", "text") == 1.0


# -- P4: the debug loop spends its retries then abandons --------------------


@pytest.mark.parametrize("configured_retries", [None, 3], ids=["default-5", "configured-3"])
def test_p4_debug_prompts_match_the_retry_budget(make_config, tmp_path, configured_retries):
    entries = toy_script_entries(agent_code=ALWAYS_RAISING, agent_name="Doomed") + [DEBUG_ENTRY]
    tag = "default" if configured_retries is None else str(configured_retries)
    script = write_jsonl(tmp_path / f"p4-{tag}.jsonl", entries)
    overrides = dict(
        script_path=str(script), iterations=1, run_dir=str(tmp_path / f"p4-run-{tag}")
    )
    if configured_retries is not None:
        overrides["max_debug_retries"] = configured_retries
    config = make_config(**overrides)
    expected = 5 if configured_retries is None else configured_retries
    assert config.max_debug_retries == expected

    result = run_search(config)
    assert len(result.archive) == 5  # the candidate never made it in
    events = read_events(config.run_dir)
    debug_prompts = [e for e in events if e["event"] == ev.PROMPT_SENT and e["phase"] == "debug"]
    assert len(debug_prompts) == expected
    abandoned = [e for e in events if e["event"] == ev.CANDIDATE_ABANDONED]
    assert len(abandoned) == 1
    assert abandoned[0]["attempts"] == expected


# -- P5: baseline control flow, counted at the wire -------------------------


def run_qa_seed(seed_id, responder):
    candidate = load_seed(seed_id, family="qa")
    calls = []

    def channel(system_prompt, user_prompt, temperature, output_fields, model_id):
        call = {"output_fields": list(output_fields), "temperature": temperature}
        calls.append(call)
        return responder(call)

    ctx = ExecutionContext(
        query_channel=channel,
        default_model_id="eval-default",
        debate_roles=["Biology Expert", "Physics Expert", "Science Generalist"],
        role_set=["math professor", "careful teacher"],
        rng_seed=0,
    )
    done = execute_forward(candidate.code, "the task", ctx)
    assert done["status"] == "ok", done.get("traceback")
    return calls


def plain_responder(call):
    return {field: {"answer": "A", "correct": "True"}.get(field, f"<{field}>") for field in call["output_fields"]}


def test_p5_baseline_model_call_counts():
    # Self-consistency draws exactly five samples.
    assert len(run_qa_seed("cot_sc", plain_responder)) == 5

    # Self-refine with the critic approving in round two: two solver calls,
    # two critic calls.
    critic_replies = iter(["False", "True"])

    def approve_second(call):
        fields = dict(plain_responder(call))
        if "correct" in fields:
            fields["correct"] = next(critic_replies)
        return fields

    calls = run_qa_seed("self_refine", approve_second)
    assert len([c for c in calls if c["output_fields"] == ["thinking", "answer"]]) == 2
    assert len([c for c in calls if c["output_fields"] == ["feedback", "correct"]]) == 2

    # A critic that never approves is cut off at five rounds.
    def never_approve(call):
        fields = dict(plain_responder(call))
        if "correct" in fields:
            fields["correct"] = "False"
        return fields

    calls = run_qa_seed("self_refine", never_approve)
    assert len([c for c in calls if c["output_fields"] == ["thinking", "answer"]]) == 5
    assert len([c for c in calls if c["output_fields"] == ["feedback", "correct"]]) == 5

    # Debate: two rounds across three debaters, then the judge.
    assert len(run_qa_seed("llm_debate", plain_responder)) == 2 * 3 + 1

    # Quality-diversity: one opener, three diversity iterations, one judge.
    assert len(run_qa_seed("quality_diversity", plain_responder)) == 5

    # Role assignment: one routing call, one expert call.
    assert len(run_qa_seed("role_assignment", plain_responder)) == 2


# -- P6: split sizes, disjointness, and seeded reproducibility --------------


def p6_grid_records(count):
    records = []
    for i in range(count):
        grid = [[(i + j) % 10 for j in range(2)] for _ in range(2)]
        records.append(
            {
                "task_id": f"grid-{i}",
                "payload": {"examples": [{"input": grid, "output": grid}], "test_input": grid},
                "gold": grid,
            }
        )
    return records


def p6_qa_records(count):
    return [
        {"task_id": f"q-{i}", "payload": f"What is {i} + {i}?", "gold": str(2 * i)}
        for i in range(count)
    ]


def test_p6_domain_splits_are_sized_disjoint_and_seeded(tmp_path):
    cases = [
        ("arc", p6_grid_records(100), 20, 60),
        ("drop", p6_qa_records(950), 128, 800),
        ("gpqa", p6_qa_records(220), 32, 166),
    ]
    for domain_id, records, expected_validation, expected_test in cases:
        spec = get_domain(domain_id)
        path = write_jsonl(tmp_path / f"{domain_id}.jsonl", records)
        validation, test = load_domain(spec, seed=11, source_path=path)
        assert len(validation) == expected_validation
        assert len(test) == expected_test
        validation_ids = {t.task_id for t in validation}
        test_ids = {t.task_id for t in test}
        assert not (validation_ids & test_ids)
        again_validation, again_test = load_domain(spec, seed=11, source_path=path)
        assert [t.task_id for t in again_validation] == [t.task_id for t in validation]
        assert [t.task_id for t in again_test] == [t.task_id for t in test]
        other_validation, _ = load_domain(spec, seed=12, source_path=path)
        assert [t.task_id for t in other_validation] != [t.task_id for t in validation]


# -- P7: the headline result cell -------------------------------------------


def test_p7_headline_cell_formatting():
    report = EvalReport(
        domain_id="arc",
        model_id="eval-default",
        split="test",
        repeats=1,
        scores=(0.28,),
        aggregate=0.28,
        median_of_repeats=0.28,
        ci_low=0.249,
        ci_high=0.311,
    )
    assert format_cell(report) == "28.0 ± 3.1"


# -- P8: a killed run resumes to the uninterrupted archive ------------------


class SearchKilled(RuntimeError):
    pass


def test_p8_kill_and_resume_reproduce_the_archive(make_config, tmp_path):
    baseline = run_search(make_config(run_dir=str(tmp_path / "uninterrupted")))

    killed_dir = str(tmp_path / "killed")

    def kill_after_iteration_one(iteration, archive):
        if iteration == 1:
            raise SearchKilled()

    with pytest.raises(SearchKilled):
        run_search(make_config(run_dir=killed_dir), on_iteration_end=kill_after_iteration_one)

    resumed = run_search(make_config(run_dir=killed_dir), resume=True)
    assert resumed.stop_reason == "completed"
    assert archive_to_dict(resumed.archive) == archive_to_dict(baseline.archive)
    assert (
        (tmp_path / "killed" / "archive.json").read_bytes()
        == (tmp_path / "uninterrupted" / "archive.json").read_bytes()
    )
