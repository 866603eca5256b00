"""Exception types shared across the pipeline."""
from __future__ import annotations


class GKTError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GKTError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigInvalid(GKTError):
    """Configuration failed validation; carries the violation list."""

    def __init__(self, violations: list) -> None:
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations) or "invalid configuration"
        super().__init__(lines)


class DatasetUnreadable(GKTError):
    """Dataset file missing, malformed, or failing record validation."""


class JoinError(GKTError):
    """Results and gold records do not join 1:1 on id."""


class BackendError(GKTError):
    """Base for generation-backend failures.

    Context attributes are filled in by the layer that knows them: the
    batch dispatcher sets batch_index/item_index, the per-user runner
    sets request_id.
    """

    def __init__(
        self,
        message: str,
        *,
        request_id: str | None = None,
        batch_index: int | None = None,
        item_index: int | None = None,
    ) -> None:
        super().__init__(message)
        self.request_id = request_id
        self.batch_index = batch_index
        self.item_index = item_index


class RemoteUnavailable(BackendError):
    """Transient remote failure (network error, timeout, 5xx). Retryable."""


class RemoteRejected(BackendError):
    """Remote refused the request (4xx). Not retryable."""


class ContextOverflow(BackendError):
    """Prompt does not fit the backend's maximum sequence length."""


class ExternalTokenizerUnavailable(GKTError):
    """External token-counting endpoint cannot be reached."""
