"""Domain adapters: task files, split sampling, scorers, prompt style.

A domain bundles everything the search and the harness need to know about a
benchmark: where tasks come from, how many go into each split, how answers
are scored, and the description block shown to the meta model.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import DataError, ValidationError
from .scoring import parse_grid

logger = logging.getLogger(__name__)

SCORERS = ("exact_match_grid", "exact_match_text", "exact_match_number", "multiple_choice", "token_f1")

_KIND_BY_SCORER = {
    "exact_match_grid": "grid",
    "exact_match_text": "text",
    "exact_match_number": "number",
    "multiple_choice": "choice",
    "token_f1": "text",
}


@dataclass(frozen=True)
class TaskInstance:
    task_id: str
    payload: Any  # str for QA tasks; {"examples": [...], "test_input": grid} for grid tasks
    gold: Any


@dataclass(frozen=True)
class DomainSpec:
    domain_id: str
    family: str  # "arc" | "qa"
    scorer: str
    validation_size: int
    test_size: int
    repeats: dict[str, int] = field(default_factory=lambda: {"validation": 1, "test": 1})
    prompt_style: str = "zero_shot"
    grid_size_limit: Optional[int] = None
    description_text: str = ""
    split_seed: int = 0

    def __post_init__(self):
        if self.family not in ("arc", "qa"):
            raise ValidationError(f"unknown family {self.family!r}")
        if self.scorer not in SCORERS:
            raise ValidationError(f"unknown scorer {self.scorer!r}")
        if self.validation_size <= 0 or self.test_size <= 0:
            raise ValidationError("split sizes must be positive")
        if any(r < 1 for r in self.repeats.values()):
            raise ValidationError("repeats must be >= 1")
        if self.prompt_style not in ("zero_shot", "one_shot"):
            raise ValidationError(f"unknown prompt style {self.prompt_style!r}")

    @property
    def answer_kind(self) -> str:
        return _KIND_BY_SCORER[self.scorer]

    @property
    def metric(self) -> str:
        return "f1" if self.scorer == "token_f1" else "accuracy"

    def repeats_for(self, split: str) -> int:
        return self.repeats.get(split, 1)


def _description(name: str) -> str:
    return (resources.files("agentforge") / "assets" / "domains" / f"{name}.txt").read_text(encoding="utf-8")


def _roles_table() -> dict[str, Any]:
    path = resources.files("agentforge") / "assets" / "roles.json"
    return json.loads(path.read_text(encoding="utf-8"))


def roles_for(domain_id: str) -> dict[str, list[str]]:
    table = _roles_table()
    entry = table.get(domain_id, table["default"])
    return {"debate_roles": list(entry["debate_roles"]), "role_set": list(entry["role_set"])}


def one_shot_exemplar() -> str:
    return (resources.files("agentforge") / "assets" / "domains" / "drop_one_shot.txt").read_text(encoding="utf-8")


_REGISTRY: dict[str, DomainSpec] = {}


def register_domain(spec: DomainSpec, replace: bool = False) -> DomainSpec:
    if spec.domain_id in _REGISTRY and not replace:
        raise ValidationError(f"domain {spec.domain_id!r} already registered")
    _REGISTRY[spec.domain_id] = spec
    return spec


def get_domain(domain_id: str) -> DomainSpec:
    _ensure_builtins()
    try:
        return _REGISTRY[domain_id]
    except KeyError as exc:
        raise ValidationError(f"unknown domain {domain_id!r}") from exc


def registered_domains() -> list[str]:
    _ensure_builtins()
    return sorted(_REGISTRY)


_BUILTINS_LOADED = False


def _ensure_builtins() -> None:
    global _BUILTINS_LOADED
    if _BUILTINS_LOADED:
        return
    _BUILTINS_LOADED = True
    builtins = [
        DomainSpec(
            domain_id="arc",
            family="arc",
            scorer="exact_match_grid",
            validation_size=20,
            test_size=60,
            repeats={"validation": 5, "test": 5},
            grid_size_limit=5,
            description_text=_description("arc"),
        ),
        DomainSpec(
            domain_id="drop",
            family="qa",
            scorer="token_f1",
            validation_size=128,
            test_size=800,
            prompt_style="one_shot",
            description_text=_description("drop"),
        ),
        DomainSpec(
            domain_id="mgsm",
            family="qa",
            scorer="exact_match_number",
            validation_size=128,
            test_size=800,
            description_text=_description("mgsm"),
        ),
        DomainSpec(
            domain_id="mmlu",
            family="qa",
            scorer="multiple_choice",
            validation_size=128,
            test_size=800,
            description_text=_description("mmlu"),
        ),
        DomainSpec(
            domain_id="gpqa",
            family="qa",
            scorer="multiple_choice",
            validation_size=32,
            test_size=166,
            repeats={"validation": 5, "test": 5},
            description_text=_description("gpqa"),
        ),
    ]
    # Math transfer targets: number-kind QA domains with stock splits.
    for math_id in ("gsm8k", "gsm_hard", "svamp", "asdiv"):
        builtins.append(
            DomainSpec(
                domain_id=math_id,
                family="qa",
                scorer="exact_match_number",
                validation_size=128,
                test_size=800,
                description_text=_description("math_transfer").replace("{domain_id}", math_id),
            )
        )
    for spec in builtins:
        _REGISTRY.setdefault(spec.domain_id, spec)


def _check_grid(value: Any, where: str, limit: Optional[int]) -> list[list[int]]:
    grid = parse_grid(value)
    if grid is None:
        raise DataError(f"{where}: not a rectangular 0-9 integer grid")
    for row in grid:
        for cell in row:
            if not 0 <= cell <= 9:
                raise DataError(f"{where}: cell value {cell} outside 0..9")
    if limit is not None and (len(grid) > limit or len(grid[0]) > limit):
        raise DataError(f"{where}: grid exceeds {limit}x{limit}")
    return grid


def _parse_task(record: dict[str, Any], index: int, spec: DomainSpec) -> Optional[TaskInstance]:
    where = f"{spec.domain_id} task {index}"
    if not isinstance(record, dict) or "task_id" not in record or "payload" not in record or "gold" not in record:
        raise DataError(f"{where}: needs task_id, payload, gold")
    payload = record["payload"]
    gold = record["gold"]
    if spec.family == "arc":
        if not isinstance(payload, dict) or "test_input" not in payload:
            raise DataError(f"{where}: grid payload needs examples + test_input")
        # Malformed grids raise; grids that are merely too large drop the task.
        examples = [
            {
                "input": _check_grid(ex.get("input"), f"{where} example {j} input", None),
                "output": _check_grid(ex.get("output"), f"{where} example {j} output", None),
            }
            for j, ex in enumerate(payload.get("examples", []))
        ]
        test_input = _check_grid(payload["test_input"], f"{where} test_input", None)
        gold = _check_grid(gold, f"{where} gold", None)
        limit = spec.grid_size_limit
        if limit is not None:
            grids = [test_input, gold] + [g for ex in examples for g in (ex["input"], ex["output"])]
            if any(len(g) > limit or len(g[0]) > limit for g in grids):
                return None
        payload = {"examples": examples, "test_input": test_input}
    else:
        payload = str(payload)
        if spec.prompt_style == "one_shot":
            payload = one_shot_exemplar().rstrip("\n") + "\n\n" + payload
    return TaskInstance(task_id=str(record["task_id"]), payload=payload, gold=gold)


def load_tasks(spec: DomainSpec, source_path: str | Path) -> list[TaskInstance]:
    path = Path(source_path)
    if not path.exists():
        raise DataError(f"task file not found: {path}")
    tasks: list[TaskInstance] = []
    with path.open(encoding="utf-8") as handle:
        for i, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{spec.domain_id} task {i}: invalid JSON: {exc}") from exc
            task = _parse_task(record, i, spec)
            if task is not None:
                tasks.append(task)
    return tasks


def load_domain(
    spec: DomainSpec, seed: Optional[int] = None, source_path: str | Path = ""
) -> tuple[list[TaskInstance], list[TaskInstance]]:
    """Sample the validation and test splits.

    Disjoint by construction and deterministic for a given seed; grid domains
    with a size limit silently drop oversized tasks before sampling.

    Raises:
        DataError: missing/malformed source or not enough tasks.
    """
    if seed is None:
        seed = spec.split_seed
    tasks = load_tasks(spec, source_path)
    needed = spec.validation_size + spec.test_size
    if len(tasks) < needed:
        raise DataError(
            f"{spec.domain_id}: need {needed} tasks ({spec.validation_size}+{spec.test_size}), "
            f"found {len(tasks)} usable"
        )
    order = np.random.default_rng(seed).permutation(len(tasks))
    validation = [tasks[i] for i in order[: spec.validation_size]]
    test = [tasks[i] for i in order[spec.validation_size : needed]]
    return validation, test
