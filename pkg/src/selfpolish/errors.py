"""Exception hierarchy shared across the package."""


class SelfPolishError(Exception):
    """Base class for all package errors."""


class TransportError(SelfPolishError):
    """Live backend failed to deliver a completion (after retries, if any)."""


class FixtureMiss(SelfPolishError):
    """Scripted backend has no entry for a request."""


class BudgetExceeded(SelfPolishError):
    """Configured call or token budget for the run was reached."""


class StorageError(SelfPolishError):
    """Cache or fixture store rejected a write."""


class StyleMismatch(SelfPolishError):
    """Demo set style does not match what the prompt builder expects."""


class PoolTooSmall(SelfPolishError):
    """Demo pool has fewer entries than the requested shot count."""


class SchemaError(SelfPolishError):
    """A dataset record does not match the published schema."""

    def __init__(self, message: str, record_index: int | None = None):
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)
        self.record_index = record_index


class NotEnoughProblems(SelfPolishError):
    """Requested sample size exceeds the number of available problems."""


class EmptyInput(SelfPolishError):
    """An operation that needs at least one element received none."""


class NoGeneratedProblem(SelfPolishError):
    """Final-answer selection requires at least one refined problem version."""
