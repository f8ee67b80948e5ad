"""Assembly of the prompts that drive the programming model.

All long-form text lives under assets/prompts/ as plain files or
string.Template files ($slot placeholders; the JSON braces in the examples
rule out str.format). This module only loads, fills, and glues them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from string import Template
from typing import Optional

from .domains import DomainSpec
from .errors import DataError
from .records import Archive, AgentCandidate, render_archive_block

PROPOSE_FIELDS = ("thought", "name", "code")
REFLECT_FIELDS = ("reflection", "thought", "name", "code")
DEBUG_FIELDS = ("thought", "debug_thought", "name", "code")

_PROMPT_ROOT = resources.files("agentforge").joinpath("assets/prompts")


def _read(name: str) -> str:
    path = _PROMPT_ROOT.joinpath(name)
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"missing prompt asset {name}") from exc


@dataclass(frozen=True)
class MetaPromptSet:
    """Every template the search loop needs, loaded once."""

    system: str
    main_template: Template
    output_instructions: str
    reflexion_1: str
    reflexion_2: str
    debug_template: Template


def load_prompt_set() -> MetaPromptSet:
    wrong_examples = _read("wrong_examples.txt").rstrip("\n")
    output_instructions = Template(_read("output_instructions.txt")).substitute(
        wrong_examples=wrong_examples
    )
    return MetaPromptSet(
        system=_read("meta_system.txt").strip(),
        main_template=Template(_read("meta_main.txt")),
        output_instructions=output_instructions.rstrip("\n"),
        reflexion_1=_read("reflexion_1.txt").rstrip("\n"),
        reflexion_2=_read("reflexion_2.txt").rstrip("\n"),
        debug_template=Template(_read("debug.txt")),
    )


def framework_source(family: str) -> str:
    """The agent-facing API reference shown to the programming model."""
    name = "framework_arc.txt" if family == "arc" else "framework_qa.txt"
    return _read(name).rstrip("\n")


def render_candidate_json(candidate: AgentCandidate) -> str:
    return json.dumps(
        {"thought": candidate.thought, "name": candidate.name, "code": candidate.code},
        indent=2,
        ensure_ascii=False,
    )


def build_main_prompt(prompt_set: MetaPromptSet, domain: DomainSpec, archive: Archive) -> str:
    return prompt_set.main_template.substitute(
        domain_description=domain.description_text.rstrip("\n"),
        framework_source=framework_source(domain.family),
        output_instructions=prompt_set.output_instructions,
        archive_block=render_archive_block(archive),
    ).rstrip("\n")


def _with_previous(main_prompt: str, candidate_json: str, tail: str) -> str:
    return "\n\n".join([main_prompt, "# Your last proposal:\n" + candidate_json, tail])


def build_reflection_prompt(
    main_prompt: str, candidate: AgentCandidate, round_text: str
) -> str:
    """One self-revision turn, flattened into a single user prompt."""
    return _with_previous(main_prompt, render_candidate_json(candidate), round_text)


def build_debug_prompt(
    prompt_set: MetaPromptSet,
    main_prompt: str,
    candidate: AgentCandidate,
    error_text: str,
) -> str:
    tail = prompt_set.debug_template.substitute(error=error_text.rstrip("\n"))
    return _with_previous(main_prompt, render_candidate_json(candidate), tail.rstrip("\n"))


def candidate_from_fields(
    fields: dict[str, str], origin: str, generation: Optional[int] = None
) -> AgentCandidate:
    return AgentCandidate(
        thought=fields["thought"],
        name=fields["name"],
        code=fields["code"],
        origin=origin,
        generation=generation,
    )
