"""Shared fixtures over the toy grid domain and scripted transcript.

The building blocks themselves (task records, script entries, jsonl writer)
live in _helpers so test modules can import them by a stable module name.
"""
import pytest

from agentforge.domains import DomainSpec, register_domain
from agentforge.search import SearchConfig

from _helpers import toy_script_entries, toy_task_records, write_jsonl


@pytest.fixture(scope="session")
def toy_domain():
    spec = DomainSpec(
        domain_id="toy_grid",
        family="arc",
        scorer="exact_match_grid",
        validation_size=5,
        test_size=5,
        description_text="Your aim is to find an optimal agent performing well on tiny identity-grid puzzles.",
    )
    return register_domain(spec, replace=True)


@pytest.fixture()
def toy_tasks_path(tmp_path):
    return write_jsonl(tmp_path / "tasks.jsonl", toy_task_records())


@pytest.fixture()
def toy_script_path(tmp_path):
    return write_jsonl(tmp_path / "script.jsonl", toy_script_entries())


@pytest.fixture()
def make_config(tmp_path, toy_domain, toy_tasks_path, toy_script_path):
    """SearchConfig factory wired to the toy domain and scripted transcript."""

    def _make(**overrides):
        settings = dict(
            domain_id=toy_domain.domain_id,
            data_path=str(toy_tasks_path),
            run_dir=str(tmp_path / "run"),
            iterations=5,
            backend="scripted",
            script_path=str(toy_script_path),
            worker_kind="stub",
            concurrency=4,
        )
        settings.update(overrides)
        return SearchConfig.from_dict(settings)

    return _make
