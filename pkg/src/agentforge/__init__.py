"""agentforge: archive-driven search over agent designs written as code."""

from .bootstrap import bootstrap_ci
from .domains import DomainSpec, TaskInstance, get_domain, load_domain, register_domain, registered_domains
from .errors import (
    BudgetExceededError,
    CandidateAbandoned,
    CandidateRuntimeError,
    ConfigDriftError,
    DataError,
    ForgeError,
    MigrationError,
    ParseError,
    RateLimited,
    SchemaError,
    StateError,
    TransportError,
    ValidationError,
    WorkerError,
)
from .evaluate import Evaluator, select_top_k, stable_seed, test_top_candidates
from .gateway import FmGateway, FmRequest, FmResponse, ResponseCache, UsageLedger
from .records import (
    AgentCandidate,
    Archive,
    ArchiveEntry,
    EvalReport,
    InfoRecord,
    archive_append,
    archive_from_dict,
    archive_to_dict,
    fitness_text,
    make_info,
    render_archive_block,
)
from .search import MetaSearcher, RunResult, SearchConfig, build_eval_stack, run_search
from .seeds import list_seeds, load_seed, load_seed_spec
from .tables import emit_results_table

__version__ = "0.1.0"

__all__ = [
    "AgentCandidate",
    "Archive",
    "ArchiveEntry",
    "BudgetExceededError",
    "CandidateAbandoned",
    "CandidateRuntimeError",
    "ConfigDriftError",
    "DataError",
    "DomainSpec",
    "EvalReport",
    "Evaluator",
    "FmGateway",
    "FmRequest",
    "FmResponse",
    "ForgeError",
    "InfoRecord",
    "MetaSearcher",
    "MigrationError",
    "ParseError",
    "RateLimited",
    "ResponseCache",
    "RunResult",
    "SchemaError",
    "SearchConfig",
    "StateError",
    "TaskInstance",
    "TransportError",
    "UsageLedger",
    "ValidationError",
    "WorkerError",
    "archive_append",
    "archive_from_dict",
    "archive_to_dict",
    "bootstrap_ci",
    "build_eval_stack",
    "emit_results_table",
    "fitness_text",
    "get_domain",
    "list_seeds",
    "load_domain",
    "load_seed",
    "load_seed_spec",
    "make_info",
    "register_domain",
    "registered_domains",
    "render_archive_block",
    "run_search",
    "select_top_k",
    "stable_seed",
    "test_top_candidates",
]
