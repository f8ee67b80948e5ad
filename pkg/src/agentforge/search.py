"""The search loop: propose, revise, evaluate, debug, archive, repeat.

Each iteration asks the programming model for a new agent design conditioned
on the whole archive, runs it through two self-revision rounds, then evaluates
it on the validation tasks. Runtime failures feed a bounded debug loop; a
candidate that survives is appended to the archive with its measured fitness.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from . import events as ev
from . import persistence, prompts
from .backends import LiveBackend, ScriptedBackend
from .domains import DomainSpec, TaskInstance, get_domain, load_domain
from .errors import (
    BudgetExceededError,
    CandidateAbandoned,
    CandidateRuntimeError,
    StateError,
    ValidationError,
)
from .evaluate import Evaluator, stable_seed
from .gateway import FmGateway, FmRequest, ResponseCache, UsageLedger
from .records import (
    Archive,
    AgentCandidate,
    archive_append,
    fitness_text,
)
from .seeds import default_seed_order, load_seed
from .workers import WorkerPool

logger = logging.getLogger(__name__)

ITERATIONS_BY_FAMILY = {"arc": 25, "qa": 30}

# Knobs that change how a run is driven but not what it computes; these stay
# out of the config hash so resuming with a different cap is not "drift".
_OPERATIONAL_KEYS = ("stop_after_iteration", "run_dir", "script_path", "cache_dir")


@dataclass(frozen=True)
class SearchConfig:
    domain_id: str
    data_path: str
    run_dir: Optional[str] = None
    run_id: Optional[str] = None
    iterations: Optional[int] = None
    seeds: Optional[tuple[str, ...]] = None
    meta_model_id: str = "meta-default"
    eval_model_id: str = "eval-default"
    run_seed: int = 0
    max_debug_retries: int = 5
    meta_temperature: float = 0.5
    concurrency: int = 8
    worker_kind: str = "stub"
    worker_command: Optional[tuple[str, ...]] = None
    worker_pool_size: int = 8
    worker_recycle_after: int = 50
    limits: Optional[dict[str, Any]] = None
    allow_model_override: bool = False
    budget_limit: Optional[float] = None
    prices: dict[str, dict[str, float]] = field(default_factory=dict)
    cache_dir: Optional[str] = None
    backend: str = "scripted"
    script_path: Optional[str] = None
    rate_limits: Optional[dict[str, float]] = None
    top_k: int = 3
    stop_after_iteration: Optional[int] = None

    def __post_init__(self):
        if self.backend not in ("scripted", "live"):
            raise ValidationError(f"unknown backend {self.backend!r}")
        if self.backend == "scripted" and not self.script_path:
            raise ValidationError("scripted backend needs script_path")
        if self.max_debug_retries < 0:
            raise ValidationError("max_debug_retries must be >= 0")

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "SearchConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        data = dict(payload)
        if "seeds" in data and data["seeds"] is not None:
            data["seeds"] = tuple(data["seeds"])
        if "worker_command" in data and data["worker_command"] is not None:
            data["worker_command"] = tuple(data["worker_command"])
        return cls(**data)

    def to_payload(self) -> dict[str, Any]:
        payload = dataclasses.asdict(self)
        if payload.get("seeds") is not None:
            payload["seeds"] = list(payload["seeds"])
        if payload.get("worker_command") is not None:
            payload["worker_command"] = list(payload["worker_command"])
        return payload

    def config_hash(self) -> str:
        payload = self.to_payload()
        for key in _OPERATIONAL_KEYS:
            payload.pop(key, None)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def resolved_run_id(self) -> str:
        return self.run_id or f"{self.domain_id}-seed{self.run_seed}"

    def resolved_iterations(self, domain: DomainSpec) -> int:
        if self.iterations is not None:
            return self.iterations
        return ITERATIONS_BY_FAMILY.get(domain.family, 30)

    def resolved_seeds(self, domain: DomainSpec) -> tuple[str, ...]:
        if self.seeds is not None:
            return self.seeds
        return default_seed_order(domain.family)


class MetaSearcher:
    """Drives the archive-conditioned proposal loop for one run."""

    def __init__(
        self,
        config: SearchConfig,
        domain: DomainSpec,
        gateway: FmGateway,
        evaluator: Evaluator,
        validation_tasks: Sequence[TaskInstance],
        event_log: Any = None,
        backend_state: Optional[Callable[[], dict[str, Any]]] = None,
        on_iteration_end: Optional[Callable[[int, Archive], None]] = None,
    ):
        self.config = config
        self.domain = domain
        self.gateway = gateway
        self.evaluator = evaluator
        self.validation_tasks = list(validation_tasks)
        self.event_log = event_log if event_log is not None else ev.NullEventLog()
        self.prompt_set = prompts.load_prompt_set()
        self.archive = Archive(entries=())
        self.backend_state = backend_state
        self.on_iteration_end = on_iteration_end
        self._config_hash = config.config_hash()

    # -- budget ------------------------------------------------------------

    def _check_budget(self) -> None:
        limit = self.config.budget_limit
        if limit is not None and self.gateway.ledger.total_cost() >= limit:
            raise BudgetExceededError(
                f"cost {self.gateway.ledger.total_cost():.4f} reached the budget of {limit:.4f}"
            )

    # -- model conversation ------------------------------------------------

    def _meta_call(self, user_prompt: str, fields: tuple[str, ...], phase: str, iteration: int) -> dict[str, str]:
        self._check_budget()
        request = FmRequest(
            model_id=self.config.meta_model_id,
            system_prompt=self.prompt_set.system,
            user_prompt=user_prompt,
            temperature=self.config.meta_temperature,
            expected_fields=fields,
        )
        # The event log must be able to reconstruct every prompt verbatim, so
        # the full text goes in, not a digest.
        self.event_log.append(
            ev.PROMPT_SENT,
            phase=phase,
            iteration=iteration,
            fields=list(fields),
            model_id=self.config.meta_model_id,
            system_prompt=request.system_prompt,
            user_prompt=user_prompt,
        )
        response = self.gateway.complete_structured(request, sample_index=iteration)
        self.event_log.append(ev.RESPONSE_RECEIVED, phase=phase, iteration=iteration)
        return response.fields

    def propose(self, main_prompt: str, iteration: int) -> AgentCandidate:
        fields = self._meta_call(main_prompt, prompts.PROPOSE_FIELDS, "propose", iteration)
        return prompts.candidate_from_fields(fields, origin="proposed")

    def reflect(self, main_prompt: str, candidate: AgentCandidate, iteration: int) -> AgentCandidate:
        """Two fixed self-revision rounds over the fresh proposal."""
        for phase, round_text in (
            ("reflect_novelty", self.prompt_set.reflexion_1),
            ("reflect_wrong_examples", self.prompt_set.reflexion_2),
        ):
            prompt = prompts.build_reflection_prompt(main_prompt, candidate, round_text)
            fields = self._meta_call(prompt, prompts.REFLECT_FIELDS, phase, iteration)
            candidate = prompts.candidate_from_fields(fields, origin="reflected")
        return candidate

    def debug_on_error(
        self, main_prompt: str, candidate: AgentCandidate, error_text: str, attempt: int, iteration: int
    ) -> AgentCandidate:
        """One repair round; raises CandidateAbandoned once retries are spent."""
        if attempt >= self.config.max_debug_retries:
            self.event_log.append(
                ev.CANDIDATE_ABANDONED, iteration=iteration, candidate=candidate.name, attempts=attempt
            )
            raise CandidateAbandoned(
                f"candidate {candidate.name!r} still failing after "
                f"{self.config.max_debug_retries} debug attempts"
            )
        prompt = prompts.build_debug_prompt(self.prompt_set, main_prompt, candidate, error_text)
        fields = self._meta_call(prompt, prompts.DEBUG_FIELDS, "debug", iteration)
        return prompts.candidate_from_fields(fields, origin="debugged")

    # -- evaluation --------------------------------------------------------

    def _evaluate(self, candidate: AgentCandidate):
        return self.evaluator.evaluate(candidate, self.validation_tasks, split="validation", mode="search")

    def seed_archive(self) -> None:
        if self.archive.entries:
            raise StateError("archive already seeded")
        for seed_id in self.config.resolved_seeds(self.domain):
            candidate = load_seed(seed_id, family=self.domain.family)
            self.archive = archive_append(self.archive, candidate)

    def evaluate_pending_seeds(self) -> None:
        """Score any archive entry that has no report yet (fresh seeds)."""
        entries = list(self.archive.entries)
        for i, entry in enumerate(entries):
            if entry.report is not None:
                continue
            report = self._evaluate(entry.candidate)
            entries[i] = dataclasses.replace(entry, report=report, fitness_text=fitness_text(report))
            self.event_log.append(
                ev.ARCHIVE_APPENDED,
                candidate=entry.candidate.name,
                generation=entry.candidate.generation,
                aggregate=report.aggregate,
                seed=True,
            )
        self.archive = Archive(entries=tuple(entries))

    # -- iterations --------------------------------------------------------

    def run_iteration(self, iteration: int) -> bool:
        """Returns True when the iteration grew the archive."""
        main_prompt = prompts.build_main_prompt(self.prompt_set, self.domain, self.archive)
        candidate = self.propose(main_prompt, iteration)
        candidate = self.reflect(main_prompt, candidate, iteration)
        attempt = 0
        while True:
            try:
                report = self._evaluate(candidate)
                break
            except CandidateRuntimeError as err:
                error_text = err.traceback_text or str(err)
                try:
                    candidate = self.debug_on_error(main_prompt, candidate, error_text, attempt, iteration)
                except CandidateAbandoned:
                    logger.info("iteration %d: candidate abandoned", iteration)
                    return False
                attempt += 1
        self.archive = archive_append(self.archive, candidate, report)
        entry = self.archive.entries[-1]
        self.event_log.append(
            ev.ARCHIVE_APPENDED,
            candidate=entry.candidate.name,
            generation=entry.candidate.generation,
            aggregate=report.aggregate,
            seed=False,
        )
        self._check_budget()
        return True

    def _checkpoint(self, next_iteration: int) -> None:
        run_dir = self.config.run_dir
        if run_dir is None:
            return
        persistence.write_state(
            Path(run_dir),
            config_hash=self._config_hash,
            next_iteration=next_iteration,
            archive=self.archive,
            backend_state=self.backend_state() if self.backend_state is not None else None,
            ledger_snapshot=self.gateway.ledger.snapshot(),
        )
        persistence.save_archive(Path(run_dir) / persistence.ARCHIVE_FILENAME, self.archive)
        self.event_log.append(ev.CHECKPOINT_WRITTEN, next_iteration=next_iteration)

    def run(self, start_iteration: int = 0) -> str:
        """Run to the iteration budget; returns the stop reason."""
        total = self.config.resolved_iterations(self.domain)
        if self.config.stop_after_iteration is not None:
            total = min(total, self.config.stop_after_iteration)
        reason = "completed"
        try:
            if start_iteration == 0:
                if not self.archive.entries:
                    self.seed_archive()
                self.evaluate_pending_seeds()
                self._checkpoint(0)
                if self.on_iteration_end is not None:
                    self.on_iteration_end(-1, self.archive)
            for iteration in range(start_iteration, total):
                self.run_iteration(iteration)
                self._checkpoint(iteration + 1)
                if self.on_iteration_end is not None:
                    self.on_iteration_end(iteration, self.archive)
        except BudgetExceededError as exc:
            logger.warning("stopping: %s", exc)
            self._checkpoint_current()
            reason = "budget_exceeded"
        self.event_log.append(ev.RUN_FINISHED, reason=reason)
        return reason

    def _checkpoint_current(self) -> None:
        run_dir = self.config.run_dir
        if run_dir is None or not persistence.has_state(Path(run_dir)):
            return
        state = persistence.load_state(Path(run_dir), self._config_hash)
        self._checkpoint(state["next_iteration"])


@dataclass
class RunResult:
    archive: Archive
    run_dir: Optional[Path]
    stop_reason: str
    gateway: FmGateway
    evaluator: Evaluator
    test_tasks: list[TaskInstance]


def build_backend(config: SearchConfig):
    if config.backend == "scripted":
        return ScriptedBackend(config.script_path)  # type: ignore[arg-type]
    return LiveBackend()


def run_search(
    config: SearchConfig,
    resume: bool = False,
    on_iteration_end: Optional[Callable[[int, Archive], None]] = None,
) -> RunResult:
    """Wire up a full run from config and drive it to completion."""
    domain = get_domain(config.domain_id)
    validation_tasks, test_tasks = load_domain(domain, source_path=config.data_path)
    backend = build_backend(config)
    ledger = UsageLedger(prices=dict(config.prices))
    cache = ResponseCache(config.cache_dir) if config.cache_dir else None
    scripted = isinstance(backend, ScriptedBackend)
    gateway = FmGateway(
        backend,
        ledger=ledger,
        cache=cache,
        sleep=(lambda _s: None) if scripted else time.sleep,
        rate_limits=config.rate_limits,
    )
    run_dir = Path(config.run_dir) if config.run_dir else None
    event_log = ev.open_event_log(run_dir)
    pool = WorkerPool(
        kind=config.worker_kind,
        command=list(config.worker_command) if config.worker_command else None,
        size=config.worker_pool_size,
        recycle_after=config.worker_recycle_after,
    )
    evaluator = Evaluator(
        domain=domain,
        gateway=gateway,
        pool=pool,
        model_id=config.eval_model_id,
        run_seed=config.run_seed,
        event_log=event_log,
        concurrency=config.concurrency,
        limits=config.limits,
        allow_model_override=config.allow_model_override,
    )
    searcher = MetaSearcher(
        config,
        domain,
        gateway,
        evaluator,
        validation_tasks,
        event_log=event_log,
        backend_state=backend.state if scripted else None,
        on_iteration_end=on_iteration_end,
    )
    start_iteration = 0
    if resume:
        if run_dir is None or not persistence.has_state(run_dir):
            raise StateError("nothing to resume: no saved state in the run directory")
        state = persistence.load_state(run_dir, config.config_hash())
        searcher.archive = persistence.load_archive(run_dir / persistence.ARCHIVE_FILENAME)
        if state.get("backend") is not None and scripted:
            backend.restore(state["backend"])
        ledger.restore(state.get("ledger", {}))
        start_iteration = int(state["next_iteration"])
        event_log.append(ev.RUN_STARTED, run_id=config.resolved_run_id(), resumed_at=start_iteration)
    else:
        if run_dir is not None:
            persistence.write_manifest(
                run_dir, config.resolved_run_id(), config.to_payload(), config.config_hash()
            )
        event_log.append(
            ev.RUN_STARTED,
            run_id=config.resolved_run_id(),
            domain=config.domain_id,
            iterations=config.resolved_iterations(domain),
        )
    try:
        reason = searcher.run(start_iteration=start_iteration)
    finally:
        pool.close()
    if run_dir is not None:
        persistence.save_json_atomic(run_dir / persistence.LEDGER_FILENAME, ledger.snapshot())
    return RunResult(
        archive=searcher.archive,
        run_dir=run_dir,
        stop_reason=reason,
        gateway=gateway,
        evaluator=evaluator,
        test_tasks=list(test_tasks),
    )


@dataclass
class EvalStack:
    """Everything needed to score candidates outside a search loop."""

    domain: DomainSpec
    evaluator: Evaluator
    gateway: FmGateway
    pool: WorkerPool
    validation_tasks: list[TaskInstance]
    test_tasks: list[TaskInstance]

    def close(self) -> None:
        self.pool.close()


def build_eval_stack(
    config: SearchConfig,
    domain_id: Optional[str] = None,
    data_path: Optional[str] = None,
    source_run: Optional[str] = None,
) -> EvalStack:
    """Standalone evaluation wiring; pass a domain/data override for transfer."""
    domain = get_domain(domain_id or config.domain_id)
    validation_tasks, test_tasks = load_domain(domain, source_path=data_path or config.data_path)
    backend = build_backend(config)
    scripted = isinstance(backend, ScriptedBackend)
    gateway = FmGateway(
        backend,
        ledger=UsageLedger(prices=dict(config.prices)),
        cache=ResponseCache(config.cache_dir) if config.cache_dir else None,
        sleep=(lambda _s: None) if scripted else time.sleep,
        rate_limits=config.rate_limits,
    )
    pool = WorkerPool(
        kind=config.worker_kind,
        command=list(config.worker_command) if config.worker_command else None,
        size=config.worker_pool_size,
        recycle_after=config.worker_recycle_after,
    )
    event_log = ev.open_event_log(Path(config.run_dir) if config.run_dir else None)
    evaluator = Evaluator(
        domain=domain,
        gateway=gateway,
        pool=pool,
        model_id=config.eval_model_id,
        run_seed=config.run_seed,
        event_log=event_log,
        concurrency=config.concurrency,
        limits=config.limits,
        allow_model_override=config.allow_model_override,
        source_run=source_run,
    )
    return EvalStack(
        domain=domain,
        evaluator=evaluator,
        gateway=gateway,
        pool=pool,
        validation_tasks=list(validation_tasks),
        test_tasks=list(test_tasks),
    )


def validation_bootstrap_seed(config: SearchConfig, candidate_code: str, split: str = "validation") -> int:
    """Exposed so audits can recompute the CI used in a stored report."""
    return stable_seed(config.run_seed, config.domain_id, split, config.eval_model_id, candidate_code)
