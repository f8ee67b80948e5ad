"""The runtime surface agent code touches inside the worker.

Everything a forward() can reach lives here: the Info message record, the
FMModule query abstraction (prompt assembly plus a proxied model call), the
grid tools, and the execution harness that turns a forward() run into a
done-frame-shaped result. Prompt assembly is a pure function of its inputs,
so the orchestrator can reconstruct any prompt from its event log.
"""
from __future__ import annotations

import ast
import copy
import collections
import functools
import heapq
import itertools
import json
import math
import random
import re
import statistics
import string
import time
import traceback
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Any, Callable, Optional

ROLE_TEMPLATE = "You are a {role}."
DEFAULT_ROLE = "helpful assistant"
ID_ALPHABET = string.ascii_letters + string.digits
TASK_INFO_NAME = "task"
TASK_AUTHOR = "User"

FORMAT_SENTENCE = "Reply EXACTLY with the following JSON format."

_CHOICE_RE = re.compile(r"\b([A-D])\b")
_NUMBER_RE = re.compile(r"-?\d[\d,]*(?:\.\d+)?")
_GRID_RE = re.compile(r"\[\s*\[.*?\]\s*\]", re.DOTALL)


class ModelCallBudgetExceeded(BaseException):
    """Deliberately not Exception: agent code cannot swallow the budget."""


class WallClockExceeded(BaseException):
    """Deliberately not Exception: agent code cannot swallow the clock."""


class FmQueryFailed(RuntimeError):
    """Orchestrator-side model failure surfaced inside agent code."""


# -- info records -----------------------------------------------------------


@dataclass(frozen=True)
class InfoRecord:
    """One message unit passed between agent modules.

    iteration_idx of -1 marks a non-iterative message (no round counter is
    shown when it is rendered into a prompt).
    """

    name: str
    author: str
    content: str
    iteration_idx: int = -1

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "author": self.author,
            "content": self.content,
            "iteration_idx": self.iteration_idx,
        }


def make_info(name: str, author: str, content: str, iteration_idx: int = -1) -> InfoRecord:
    if not name:
        raise ValueError("info name must be nonempty")
    if iteration_idx < -1:
        raise ValueError(f"iteration_idx must be >= -1, got {iteration_idx}")
    if content is None:
        raise ValueError("info content may be empty but never absent")
    return InfoRecord(name=name, author=author, content=content, iteration_idx=iteration_idx)


# -- prompt assembly --------------------------------------------------------


def format_output_instruction(expected_fields: list[str]) -> str:
    if not expected_fields:
        raise ValueError("expected_fields must be nonempty")
    return (
        f"{FORMAT_SENTENCE}\n"
        f"{str(list(expected_fields))}\n"
        "DO NOT MISS ANY FIELDS AND MAKE SURE THE JSON FORMAT IS CORRECT!\n"
    )


def render_info_header(info: InfoRecord, caller_author: str) -> str:
    header = f"### {info.name}"
    if info.iteration_idx > -1:
        header += f" #{info.iteration_idx + 1}"
    header += f" by {info.author}"
    if info.author == caller_author:
        header += " (yourself)"
    return header + ":"


def build_prompt(
    input_infos: list[InfoRecord],
    instruction: str,
    role: str,
    output_fields: list[str],
    caller_author: str,
) -> tuple[str, str]:
    """Assemble the (system, user) prompt pair for one module query.

    The info named "task" is rendered bare under "# Your Task:"; every other
    info gets a titled header with its author and round number.
    """
    system_prompt = ROLE_TEMPLATE.format(role=role)
    parts = [f"# Output Format:\n{format_output_instruction(output_fields)}"]
    task_texts = [info.content for info in input_infos if info.name == TASK_INFO_NAME]
    parts.append("# Your Task:\n" + "\n\n".join(task_texts) if task_texts else "# Your Task:")
    for info in input_infos:
        if info.name == TASK_INFO_NAME:
            continue
        parts.append(f"{render_info_header(info, caller_author)}\n{info.content}")
    parts.append(f"# Instruction: \n{instruction}")
    return system_prompt, "\n\n".join(parts)


# -- answer normalization (used by the majority-vote tool) ------------------


def parse_grid(value: Any) -> Optional[list[list[int]]]:
    """Coerce a value into a rectangular integer grid, or None."""
    if isinstance(value, str):
        match = _GRID_RE.search(value)
        if match is None:
            return None
        try:
            value = ast.literal_eval(match.group(0))
        except (ValueError, SyntaxError):
            return None
    if not isinstance(value, (list, tuple)) or not value:
        return None
    rows = []
    width = None
    for row in value:
        if not isinstance(row, (list, tuple)) or not row:
            return None
        cells = []
        for cell in row:
            if isinstance(cell, bool) or not isinstance(cell, int):
                return None
            cells.append(int(cell))
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            return None
        rows.append(cells)
    return rows


def grid_to_text(grid: list[list[int]]) -> str:
    return str([list(row) for row in grid])


def normalize_number(text: Any) -> Optional[Decimal]:
    if isinstance(text, (int, float)):
        return Decimal(str(text))
    matches = _NUMBER_RE.findall(str(text))
    if not matches:
        return None
    cleaned = matches[-1].replace(",", "").rstrip(".")
    try:
        return Decimal(cleaned).normalize()
    except InvalidOperation:
        return None


def extract_choice(text: str) -> Optional[str]:
    match = _CHOICE_RE.search(str(text))
    return match.group(1) if match else None


def _normalize_text(text: str) -> str:
    return " ".join(str(text).strip().lower().split())


def vote_normalizer(kind: str) -> Callable[[str], str]:
    if kind == "grid":
        return lambda text: grid_to_text(parse_grid(text)) if parse_grid(text) is not None else _normalize_text(text)
    if kind == "number":
        return lambda text: str(normalize_number(text)) if normalize_number(text) is not None else _normalize_text(text)
    if kind == "choice":
        return lambda text: extract_choice(text) or _normalize_text(text)
    return _normalize_text


def tally_votes(answers: list[str], normalize: Optional[Callable[[str], str]] = None) -> str:
    """Most frequent answer under `normalize`; ties break to first occurrence."""
    if not answers:
        raise ValueError("majority vote needs at least one answer")
    if normalize is None:
        normalize = _normalize_text
    counts: dict[str, int] = {}
    first_at: dict[str, int] = {}
    originals: dict[str, str] = {}
    for i, answer in enumerate(answers):
        key = normalize(answer)
        counts[key] = counts.get(key, 0) + 1
        if key not in first_at:
            first_at[key] = i
            originals[key] = answer
    best = max(counts, key=lambda key: (counts[key], -first_at[key]))
    return originals[best]


# -- execution context ------------------------------------------------------


class ExecutionContext:
    """Per-execution state: query channel, limits, counters, deterministic rng."""

    def __init__(
        self,
        query_channel: Callable[[str, str, float, list[str], str], dict[str, str]],
        default_model_id: str,
        answer_kind: str = "text",
        debate_roles: Optional[list[str]] = None,
        role_set: Optional[list[str]] = None,
        examples: Optional[list[dict[str, Any]]] = None,
        test_input: Optional[list[list[int]]] = None,
        rng_seed: int = 0,
        max_model_calls: int = 300,
        wall_seconds: float = 120.0,
        allow_model_override: bool = False,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.query_channel = query_channel
        self.default_model_id = default_model_id
        self.answer_kind = answer_kind
        self.debate_roles = list(debate_roles or [])
        self.role_set = list(role_set or [])
        self.examples = examples or []
        self.test_input = test_input
        self.rng = random.Random(rng_seed)
        self.max_model_calls = max_model_calls
        self.wall_seconds = wall_seconds
        self.allow_model_override = allow_model_override
        self.clock = clock
        self.model_calls = 0
        self.started = clock()
        self._used_ids: set[str] = set()

    def new_module_id(self) -> str:
        while True:
            candidate = "".join(self.rng.choice(ID_ALPHABET) for _ in range(4))
            if candidate not in self._used_ids:
                self._used_ids.add(candidate)
                return candidate

    def resolve_model(self, requested: Optional[str]) -> str:
        if requested and self.allow_model_override:
            return requested
        return self.default_model_id

    def check_wall(self) -> None:
        if self.clock() - self.started > self.wall_seconds:
            raise WallClockExceeded(f"execution exceeded {self.wall_seconds}s")

    def fm_query(
        self, system_prompt: str, user_prompt: str, temperature: float, output_fields: list[str], model_id: str
    ) -> dict[str, str]:
        self.check_wall()
        if self.model_calls >= self.max_model_calls:
            raise ModelCallBudgetExceeded(f"model-call budget of {self.max_model_calls} exhausted")
        self.model_calls += 1
        return self.query_channel(system_prompt, user_prompt, temperature, output_fields, model_id)


class FMModule:
    """One structured model query with a role, temperature, and named outputs."""

    _ctx: ExecutionContext  # injected per execution

    def __init__(
        self,
        output_fields: list[str],
        name: str,
        role: str = DEFAULT_ROLE,
        model: Optional[str] = None,
        temperature: float = 0.5,
    ):
        if not output_fields:
            raise ValueError("output_fields must be nonempty")
        self.output_fields = list(output_fields)
        self.name = name
        self.role = role or DEFAULT_ROLE
        self.model = model
        self.temperature = temperature
        self.id = self._ctx.new_module_id()

    def __repr__(self) -> str:
        return f"{self.name} {self.id}"

    def query(self, input_infos: list[InfoRecord], instruction: str, iteration_idx: int = -1) -> list[InfoRecord]:
        system_prompt, user_prompt = build_prompt(
            input_infos, instruction, self.role, self.output_fields, repr(self)
        )
        fields = self._ctx.fm_query(
            system_prompt, user_prompt, self.temperature, self.output_fields, self._ctx.resolve_model(self.model)
        )
        return [
            make_info(field, repr(self), fields.get(field, ""), iteration_idx)
            for field in self.output_fields
        ]

    __call__ = query


# -- grid tools -------------------------------------------------------------


def _run_transform(
    code_text: str, grid: list[list[int]], exec_globals: Optional[dict[str, Any]] = None
) -> list[list[int]]:
    """Exec transformation source and apply its transform() to a copy of grid.

    Raises on anything abnormal: missing transform, raising transform, or a
    non-grid return. Callers decide whether that becomes feedback or an error
    answer.
    """
    namespace: dict[str, Any] = {
        "math": math,
        "itertools": itertools,
        "collections": collections,
        "copy": copy,
        "re": re,
    }
    if exec_globals is not None:
        namespace.update(exec_globals)
    exec(code_text, namespace)  # noqa: S102 - confined by the worker sandbox
    transform = namespace.get("transform")
    if not callable(transform):
        raise ValueError("code must define a function transform(grid)")
    result = transform(copy.deepcopy(grid))
    parsed = parse_grid(result)
    if parsed is None:
        raise ValueError(f"transform returned a non-grid: {result!r}")
    return parsed


def _content_of(code: Any) -> str:
    if isinstance(code, InfoRecord):
        return code.content
    return str(code)


class AgentSystem:
    """Execution harness a forward() is bound to; exposes the tool surface."""

    def __init__(self, ctx: ExecutionContext, exec_globals: Optional[dict[str, Any]] = None):
        self._ctx = ctx
        self._exec_globals = exec_globals
        self.answer_kind = ctx.answer_kind
        self.debate_roles = list(ctx.debate_roles)
        self.role_set = list(ctx.role_set)

    # -- generic helpers -------------------------------------------------
    def majority_vote(self, answers: list[Any]) -> Any:
        contents = [(a, _content_of(a)) for a in answers]
        normalize = vote_normalizer(self.answer_kind)
        winner = tally_votes([c for _, c in contents], normalize=normalize)
        for original, content in contents:
            if normalize(content) == normalize(winner):
                return original
        return contents[0][0]

    # -- grid tools (meaningful only when grid bindings are present) -----
    def run_examples_and_get_feedback(self, code: Any):
        """Run candidate transformation code on the example pairs.

        Returns (feedback info, correct examples, wrong examples). Exceptions
        inside the transformation are captured into the feedback text, never
        raised.
        """
        code_text = _content_of(code)
        correct: list[dict[str, Any]] = []
        wrong: list[dict[str, Any]] = []
        lines = []
        for i, example in enumerate(self._ctx.examples):
            try:
                produced = _run_transform(code_text, example["input"], self._exec_globals)
            except Exception as exc:  # noqa: BLE001 - feedback must never propagate
                wrong.append(example)
                lines.append(f"Example {i}: Error during execution: {exc}")
                continue
            if produced == example["output"]:
                correct.append(example)
                lines.append(f"Example {i}: Correct.")
            else:
                wrong.append(example)
                lines.append(
                    f"Example {i}: Wrong. input = {grid_to_text(example['input'])}, "
                    f"expected output = {grid_to_text(example['output'])}, "
                    f"your output = {grid_to_text(produced)}"
                )
        summary = f"{len(correct)} of {len(self._ctx.examples)} examples correct.\n" + "\n".join(lines)
        feedback = make_info("feedback", "Examples Checker", summary, -1)
        return feedback, correct, wrong

    def get_test_output_from_code(self, code: Any) -> InfoRecord:
        """Apply candidate transformation code to the test input grid."""
        code_text = _content_of(code)
        if self._ctx.test_input is None:
            return make_info("answer", "Code Runner", "Error: no test input bound", -1)
        try:
            produced = _run_transform(code_text, self._ctx.test_input, self._exec_globals)
        except Exception as exc:  # noqa: BLE001 - becomes a zero-scoring answer
            return make_info("answer", "Code Runner", f"Error: {exc}", -1)
        return make_info("answer", "Code Runner", grid_to_text(produced), -1)

    def forward(self, taskInfo):  # noqa: N803 - framework-facing name
        raise NotImplementedError("agent source must define forward(self, taskInfo)")


SAFE_MODULES = {
    "math": math,
    "re": re,
    "json": json,
    "itertools": itertools,
    "collections": collections,
    "functools": functools,
    "statistics": statistics,
    "heapq": heapq,
    "string": string,
    "copy": copy,
}


def build_agent_namespace(
    ctx: ExecutionContext, builtins_override: Optional[dict[str, Any]] = None
) -> dict[str, Any]:
    bound_module = type("FMModule", (FMModule,), {"_ctx": ctx})
    namespace: dict[str, Any] = {"Info": make_info, "FMModule": bound_module}
    namespace.update(SAFE_MODULES)
    namespace["random"] = random.Random(ctx.rng.randrange(2**32))
    if builtins_override is not None:
        namespace["__builtins__"] = builtins_override
    return namespace


# -- task rendering ---------------------------------------------------------

GRID_TASK_PREAMBLE = (
    "You will be given some number of paired example inputs and outputs. "
    "The outputs were produced by applying a transformation rule to the input grids. "
    "In addition to the paired example inputs and outputs, there is also one test input without a known output.\n"
    "The inputs and outputs are each \"grids\". A grid is a rectangular matrix of integers between 0 and 9 (inclusive). "
    "Each number corresponds to a color. 0 is black.\n"
    "Your task is to determine the transformation rule from the examples and apply it to the test input, "
    "determining the size of the output grid and correctly filling every cell.\n"
    "When asked for code, write a Python function transform(grid: list[list[int]]) -> list[list[int]] "
    "implementing the rule; only the framework's tools will run it."
)


def prepare_task(task_payload: Any) -> tuple[str, Optional[list[dict[str, Any]]], Optional[list[list[int]]]]:
    """Render a task payload to the text shown to modules.

    Grid tasks ({"examples": [...], "test_input": grid}) get a textual
    rendering plus structured bindings for the tools; plain payloads pass
    through as text.
    """
    if isinstance(task_payload, dict) and "test_input" in task_payload:
        examples = task_payload.get("examples", [])
        test_input = task_payload["test_input"]
        parts = [GRID_TASK_PREAMBLE, "\n## Examples:"]
        for i, example in enumerate(examples):
            parts.append(
                f"### Example {i}:\ninput = {grid_to_text(example['input'])}\n"
                f"output = {grid_to_text(example['output'])}"
            )
        parts.append(f"### Test Problem:\ninput = {grid_to_text(test_input)}")
        return "\n\n".join(parts), examples, test_input
    return str(task_payload), None, None


# -- the harness ------------------------------------------------------------


def execute_forward(
    agent_source: str,
    task_text: str,
    ctx: ExecutionContext,
    builtins_override: Optional[dict[str, Any]] = None,
) -> dict[str, Any]:
    """Compile and run a forward() against one task.

    Returns a done-frame-shaped dict: status, answer or traceback, counters.
    A plain-text return is wrapped as an answer info authored "agent". When a
    builtins override is given (the sandbox's restricted set), both the agent
    source and any transformation code it submits run under it.
    """

    def counters() -> dict[str, Any]:
        return {"model_calls": ctx.model_calls, "wall_time": ctx.clock() - ctx.started}

    namespace = build_agent_namespace(ctx, builtins_override)
    try:
        exec(agent_source, namespace)  # noqa: S102 - restricted builtins, no process state
    except Exception:
        return {"status": "error", "traceback": traceback.format_exc(), "counters": counters()}
    forward = namespace.get("forward")
    if not callable(forward):
        return {
            "status": "error",
            "traceback": "agent source does not define forward(self, taskInfo)",
            "counters": counters(),
        }
    exec_globals = None if builtins_override is None else {"__builtins__": builtins_override}
    system = AgentSystem(ctx, exec_globals=exec_globals)
    task_info = make_info(TASK_INFO_NAME, TASK_AUTHOR, task_text, -1)
    try:
        result = forward(system, task_info)
    except ModelCallBudgetExceeded:
        return {"status": "limit_exceeded", "traceback": traceback.format_exc(), "counters": counters()}
    except WallClockExceeded:
        return {"status": "timeout", "traceback": traceback.format_exc(), "counters": counters()}
    except FmQueryFailed:
        return {"status": "error", "traceback": traceback.format_exc(), "counters": counters()}
    except Exception:
        return {"status": "error", "traceback": traceback.format_exc(), "counters": counters()}
    if isinstance(result, InfoRecord):
        answer = result
    elif isinstance(result, str):
        answer = make_info("answer", "agent", result, -1)
    else:
        return {
            "status": "error",
            "traceback": f"forward must return an Info or plain text, got {type(result).__name__}",
            "counters": counters(),
        }
    return {"status": "ok", "answer": answer.to_dict(), "counters": counters()}
