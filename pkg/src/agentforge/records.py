"""Core records: info messages, candidates, evaluation reports, and the archive.

The archive is the growing list of evaluated agent designs that gets rendered
into every meta-level prompt; everything here is an immutable value object so
the search loop can hand copies around freely.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .errors import StateError, ValidationError

ORIGINS = ("seed", "proposed", "reflected", "debugged")

# Rendered metric line shown to the meta model, e.g.
#   Accuracy: 28.0%, 95% CI (24.9, 31.1), median over repeats 28.0%
FITNESS_TEMPLATE = "{label}: {mean:.1f}%, 95% CI ({low:.1f}, {high:.1f}), median over repeats {median:.1f}%"

METRIC_LABELS = {"accuracy": "Accuracy", "f1": "F1 Score"}


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

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "InfoRecord":
        return make_info(
            data["name"],
            data.get("author", ""),
            data.get("content", ""),
            int(data.get("iteration_idx", -1)),
        )


def make_info(name: str, author: str, content: str, iteration_idx: int = -1) -> InfoRecord:
    """Construct a validated InfoRecord.

    Raises:
        ValidationError: if name is empty or iteration_idx < -1.
    """
    if not name:
        raise ValidationError("info name must be nonempty")
    if iteration_idx < -1:
        raise ValidationError(f"iteration_idx must be >= -1, got {iteration_idx}")
    if content is None:
        raise ValidationError("info content may be empty but never absent")
    return InfoRecord(name=name, author=author, content=content, iteration_idx=iteration_idx)


@dataclass(frozen=True)
class AgentCandidate:
    """A proposed agent design: rationale, display name, and forward source."""

    thought: str
    name: str
    code: str
    origin: str = "proposed"
    generation: Optional[int] = None

    def __post_init__(self):
        if not self.name:
            raise ValidationError("candidate name must be nonempty")
        if not self.code:
            raise ValidationError("candidate code must be nonempty")
        if self.origin not in ORIGINS:
            raise ValidationError(f"unknown origin {self.origin!r}")
        if self.generation is not None and self.generation < 0:
            raise ValidationError("generation must be nonnegative")


@dataclass(frozen=True)
class EvalReport:
    """Scores for one candidate on one split of one domain.

    scores holds the pooled per-(question, repeat) values in [0, 1], ordered
    repeat-major so per-repeat slices are contiguous.
    """

    domain_id: str
    model_id: str
    split: str
    repeats: int
    scores: tuple[float, ...]
    aggregate: float
    median_of_repeats: float
    ci_low: float
    ci_high: float
    wall_time: float = 0.0
    cost_units: float = 0.0
    metric: str = "accuracy"
    source_run: Optional[str] = None

    def __post_init__(self):
        if self.split not in ("validation", "test"):
            raise ValidationError(f"split must be validation|test, got {self.split!r}")
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")
        if not self.scores:
            raise ValidationError("scores must be nonempty")
        if len(self.scores) % self.repeats != 0:
            raise ValidationError("len(scores) must be split size x repeats")
        if not all(0.0 <= s <= 1.0 for s in self.scores):
            raise ValidationError("scores must lie in [0, 1]")
        if not (0.0 <= self.ci_low <= self.aggregate <= self.ci_high <= 1.0):
            raise ValidationError(
                f"CI must bracket the aggregate: {self.ci_low} <= {self.aggregate} <= {self.ci_high}"
            )
        if self.metric not in METRIC_LABELS:
            raise ValidationError(f"unknown metric {self.metric!r}")

    def to_dict(self) -> dict[str, Any]:
        data = {
            "domain_id": self.domain_id,
            "model_id": self.model_id,
            "split": self.split,
            "repeats": self.repeats,
            "scores": list(self.scores),
            "aggregate": self.aggregate,
            "median_of_repeats": self.median_of_repeats,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "wall_time": self.wall_time,
            "cost_units": self.cost_units,
            "metric": self.metric,
        }
        if self.source_run is not None:
            data["source_run"] = self.source_run
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalReport":
        return cls(
            domain_id=data["domain_id"],
            model_id=data["model_id"],
            split=data["split"],
            repeats=int(data["repeats"]),
            scores=tuple(float(s) for s in data["scores"]),
            aggregate=float(data["aggregate"]),
            median_of_repeats=float(data["median_of_repeats"]),
            ci_low=float(data["ci_low"]),
            ci_high=float(data["ci_high"]),
            wall_time=float(data.get("wall_time", 0.0)),
            cost_units=float(data.get("cost_units", 0.0)),
            metric=data.get("metric", "accuracy"),
            source_run=data.get("source_run"),
        )


def fitness_text(report: EvalReport) -> str:
    """Render the metric line embedded in the archive block."""
    return FITNESS_TEMPLATE.format(
        label=METRIC_LABELS[report.metric],
        mean=report.aggregate * 100.0,
        low=report.ci_low * 100.0,
        high=report.ci_high * 100.0,
        median=report.median_of_repeats * 100.0,
    )


UNEVALUATED_FITNESS = "Not yet evaluated."


@dataclass(frozen=True)
class ArchiveEntry:
    candidate: AgentCandidate
    report: Optional[EvalReport]
    fitness_text: str


@dataclass(frozen=True)
class Archive:
    """Ordered, generation-numbered collection of evaluated candidates."""

    entries: tuple[ArchiveEntry, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)

    def generations(self) -> list[int]:
        return [e.candidate.generation for e in self.entries]

    def next_generation(self) -> int:
        if not self.entries:
            return 0
        return max(self.generations()) + 1


def archive_append(archive: Archive, candidate: AgentCandidate, report: Optional[EvalReport] = None) -> Archive:
    """Append a candidate, assigning the next generation number.

    Seeds may be appended without a report; anything else must carry one so
    the meta model never sees an unmeasured discovery.

    Raises:
        ValidationError: non-seed candidate without a report.
    """
    if candidate.origin != "seed" and report is None:
        raise ValidationError(f"candidate {candidate.name!r} ({candidate.origin}) requires an EvalReport")
    numbered = replace(candidate, generation=archive.next_generation())
    rendered = fitness_text(report) if report is not None else UNEVALUATED_FITNESS
    entry = ArchiveEntry(candidate=numbered, report=report, fitness_text=rendered)
    return Archive(entries=archive.entries + (entry,))


def render_archive_block(archive: Archive) -> str:
    """Render the archive as the text block embedded in the meta prompt.

    One JSON object per entry, in generation order, mirroring the format the
    meta model is asked to reply in. Pure: equal archives render to
    byte-identical text.

    Raises:
        StateError: empty archive (a run is always seeded first).
    """
    if not archive.entries:
        raise StateError("cannot render an empty archive")
    blocks = []
    for entry in archive.entries:
        obj = {
            "thought": entry.candidate.thought,
            "name": entry.candidate.name,
            "code": entry.candidate.code,
            "generation": entry.candidate.generation,
            "fitness": entry.fitness_text,
        }
        blocks.append(json.dumps(obj, indent=2, ensure_ascii=False))
    return "\n\n".join(blocks)


def archive_to_dict(archive: Archive) -> dict[str, Any]:
    return {
        "version": 1,
        "entries": [
            {
                "generation": e.candidate.generation,
                "origin": e.candidate.origin,
                "thought": e.candidate.thought,
                "name": e.candidate.name,
                "code": e.candidate.code,
                "fitness_text": e.fitness_text,
                "report": e.report.to_dict() if e.report is not None else None,
            }
            for e in archive.entries
        ],
    }


def archive_from_dict(data: dict[str, Any]) -> Archive:
    entries = []
    for raw in data["entries"]:
        candidate = AgentCandidate(
            thought=raw["thought"],
            name=raw["name"],
            code=raw["code"],
            origin=raw["origin"],
            generation=raw["generation"],
        )
        report = EvalReport.from_dict(raw["report"]) if raw.get("report") else None
        entries.append(ArchiveEntry(candidate=candidate, report=report, fitness_text=raw["fitness_text"]))
    return Archive(entries=tuple(entries))
