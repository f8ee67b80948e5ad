"""Scoring candidates on domain tasks through the worker protocol.

One evaluation = every (task, repeat) pair executed against the worker pool,
scored with the domain's scorer, then aggregated with a bootstrap confidence
interval. Failures either abort the evaluation (search mode, so the debug
loop can react) or score zero (report mode).
"""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from . import events as ev
from . import protocol
from .bootstrap import bootstrap_ci
from .domains import DomainSpec, TaskInstance, roles_for
from .errors import CandidateRuntimeError
from .gateway import FmGateway, FmRequest
from .records import AgentCandidate, Archive, ArchiveEntry, EvalReport
from .scoring import score_exact_match, score_token_f1
from .workers import WorkerPool

logger = logging.getLogger(__name__)

DEFAULT_CONCURRENCY = 8


def stable_seed(*parts: Any) -> int:
    """Deterministic 31-bit seed from arbitrary JSON-serializable parts."""
    blob = json.dumps([str(p) for p in parts], separators=(",", ":")).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:4], "big") & 0x7FFFFFFF


@dataclass
class _SlotResult:
    score: float = 0.0
    failed: bool = False
    message: str = ""
    traceback_text: str = ""
    task_id: str = ""


@dataclass
class Evaluator:
    """Evaluates agent code for one domain against one model."""

    domain: DomainSpec
    gateway: FmGateway
    pool: WorkerPool
    model_id: str
    run_seed: int
    event_log: Any = field(default_factory=lambda: ev.NullEventLog())
    concurrency: int = DEFAULT_CONCURRENCY
    limits: Optional[dict[str, Any]] = None
    allow_model_override: bool = False
    source_run: Optional[str] = None

    def evaluate(
        self,
        candidate: AgentCandidate,
        tasks: Sequence[TaskInstance],
        split: str,
        repeats: Optional[int] = None,
        mode: str = "search",
    ) -> EvalReport:
        if mode not in ("search", "report"):
            raise ValueError(f"unknown evaluation mode {mode!r}")
        if repeats is None:
            repeats = self.domain.repeats_for(split)
        n_tasks = len(tasks)
        slots: list[Optional[_SlotResult]] = [None] * (n_tasks * repeats)
        fingerprint = hashlib.sha256(candidate.code.encode("utf-8")).hexdigest()[:8]
        started_clock = self.gateway.clock()
        cost_before = self.gateway.ledger.total_cost()

        def run_slot(slot: int) -> None:
            repeat, task_index = divmod(slot, n_tasks)
            slots[slot] = self._run_one(
                candidate, tasks[task_index], split, fingerprint, task_index, repeat
            )

        if self.concurrency <= 1:
            for slot in range(len(slots)):
                run_slot(slot)
        else:
            with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
                list(pool.map(run_slot, range(len(slots))))

        failures = [s for s in slots if s is not None and s.failed]
        if mode == "search" and failures:
            first = next(s for s in slots if s is not None and s.failed)
            self.event_log.append(
                ev.CANDIDATE_EVALUATED,
                candidate=candidate.name,
                domain=self.domain.domain_id,
                split=split,
                status="failed",
                failures=len(failures),
                first_failed_task=first.task_id,
                mode=mode,
            )
            raise CandidateRuntimeError(
                first.message, task_id=first.task_id, traceback_text=first.traceback_text
            )
        scores = tuple(s.score if s is not None else 0.0 for s in slots)
        aggregate = float(np.mean(scores))
        per_repeat = [float(np.mean(scores[r * n_tasks : (r + 1) * n_tasks])) for r in range(repeats)]
        median = float(np.median(per_repeat))
        ci_low, ci_high = bootstrap_ci(
            scores, seed=stable_seed(self.run_seed, self.domain.domain_id, split, self.model_id, candidate.code)
        )
        report = EvalReport(
            domain_id=self.domain.domain_id,
            model_id=self.model_id,
            split=split,
            repeats=repeats,
            scores=scores,
            aggregate=aggregate,
            median_of_repeats=median,
            ci_low=min(ci_low, aggregate),
            ci_high=max(ci_high, aggregate),
            wall_time=float(self.gateway.clock() - started_clock),
            cost_units=float(self.gateway.ledger.total_cost() - cost_before),
            metric=self.domain.metric,
            source_run=self.source_run,
        )
        self.event_log.append(
            ev.CANDIDATE_EVALUATED,
            candidate=candidate.name,
            domain=self.domain.domain_id,
            split=split,
            status="ok",
            aggregate=aggregate,
            ci=[report.ci_low, report.ci_high],
            failures=len(failures),
            mode=mode,
        )
        return report

    def _run_one(
        self,
        candidate: AgentCandidate,
        task: TaskInstance,
        split: str,
        fingerprint: str,
        task_index: int,
        repeat: int,
    ) -> _SlotResult:
        roles = roles_for(self.domain.domain_id)
        request = protocol.execute_agent_frame(
            request_id=f"{fingerprint}:{split}:t{task_index}:r{repeat}",
            agent_source=candidate.code,
            task_payload=task.payload,
            tool_set={
                "default_model_id": self.model_id,
                "answer_kind": self.domain.answer_kind,
                "debate_roles": roles.get("debate_roles"),
                "role_set": roles.get("role_set"),
                "rng_seed": stable_seed(self.run_seed, task.task_id, repeat),
                "allow_model_override": self.allow_model_override,
            },
            limits=self.limits,
            repeat_index=repeat,
        )

        def fm_handler(frame: dict[str, Any]) -> dict[str, str]:
            model_id = frame.get("model_id") or self.model_id
            if not self.allow_model_override:
                model_id = self.model_id
            fm_request = FmRequest(
                model_id=model_id,
                system_prompt=frame["system_prompt"],
                user_prompt=frame["user_prompt"],
                temperature=float(frame.get("temperature", 0.5)),
                expected_fields=tuple(frame.get("expected_fields", ())),
            )
            sample_index = repeat * 10_000 + int(frame.get("call_seq", 0))
            response = self.gateway.complete_structured(fm_request, sample_index=sample_index)
            self.event_log.append(
                ev.FM_QUERY,
                task_id=task.task_id,
                repeat=repeat,
                call_seq=frame.get("call_seq"),
                model_id=model_id,
                expected_fields=list(fm_request.expected_fields),
                system_prompt=fm_request.system_prompt,
                user_prompt=fm_request.user_prompt,
                temperature=fm_request.temperature,
            )
            return response.fields

        done = self.pool.execute(request, fm_handler)
        status = done.get("status")
        if status != protocol.STATUS_OK:
            return _SlotResult(
                failed=True,
                message=f"{status} on task {task.task_id}",
                traceback_text=done.get("traceback", ""),
                task_id=task.task_id,
            )
        answer = done.get("answer") or {}
        content = answer.get("content", "")
        try:
            score = self._score(content, task)
        except Exception as exc:  # noqa: BLE001 - malformed answers score 0, never crash
            logger.debug("unscorable answer for %s: %s", task.task_id, exc)
            score = 0.0
        return _SlotResult(score=score, task_id=task.task_id)

    def _score(self, content: str, task: TaskInstance) -> float:
        if self.domain.scorer == "token_f1":
            gold = task.gold if isinstance(task.gold, (list, tuple)) else [task.gold]
            return score_token_f1(content, [str(g) for g in gold])
        return score_exact_match(content, task.gold, self.domain.answer_kind)


def select_top_k(archive: Archive, k: int = 3) -> list[ArchiveEntry]:
    """Best-validated entries, ties broken toward earlier generations."""
    scored = [e for e in archive.entries if e.report is not None]
    scored.sort(key=lambda e: (-e.report.aggregate, e.candidate.generation or 0))
    return scored[:k]


def test_top_candidates(
    evaluator: Evaluator,
    archive: Archive,
    test_tasks: Sequence[TaskInstance],
    k: int = 3,
) -> list[tuple[ArchiveEntry, EvalReport]]:
    """Re-score the archive's best candidates on held-out tasks (report mode)."""
    results = []
    for entry in select_top_k(archive, k):
        report = evaluator.evaluate(entry.candidate, test_tasks, split="test", mode="report")
        results.append((entry, report))
    return results
