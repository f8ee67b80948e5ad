"""Exception taxonomy shared across the package."""


class ForgeError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ForgeError):
    """A value violated a type or operation precondition."""


class StateError(ForgeError):
    """An operation was invoked in a state it does not support."""


class SchemaError(ForgeError):
    """A model response could not be coerced into the expected fields."""


class TransportError(ForgeError):
    """The backend could not be reached or failed irrecoverably."""


class RateLimited(ForgeError):
    """Internal signal: the backend asked us to back off. Retried, never surfaced."""

    def __init__(self, message: str = "rate limited", retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class DataError(ForgeError):
    """A dataset file was missing, malformed, or too small."""


class ParseError(ForgeError):
    """A persisted artifact could not be parsed."""


class MigrationError(ForgeError):
    """A persisted artifact has an unsupported version."""


class ConfigDriftError(ForgeError):
    """A resume was attempted with a config that no longer matches the run."""


class CandidateRuntimeError(ForgeError):
    """A candidate's forward raised (or timed out) during evaluation.

    Carries enough context for the debug loop to build its prompt.
    """

    def __init__(self, message: str, task_id: str | None = None, traceback_text: str = ""):
        super().__init__(message)
        self.task_id = task_id
        self.traceback_text = traceback_text or message


class CandidateAbandoned(ForgeError):
    """The debug loop exhausted its retries; the candidate is dropped."""


class BudgetExceededError(ForgeError):
    """The configured cost cap was hit; the run checkpointed and stopped."""


class WorkerError(ForgeError):
    """The worker process misbehaved at the protocol level."""
