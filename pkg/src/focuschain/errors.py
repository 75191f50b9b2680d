"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PipelineError):
    """A domain object or input violates an invariant or precondition."""


class ParseError(PipelineError):
    """A model completion could not be turned into the expected structure."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class AllCandidatesInvalidError(ParseError):
    """Every question candidate in a completion failed validation."""

    def __init__(self, reasons: list[str]):
        super().__init__(f"all candidates invalid: {'; '.join(reasons) or 'no candidates'}")
        self.reasons = reasons


class BackendError(PipelineError):
    """Base class for model-call failures."""


class TransportError(BackendError):
    """The endpoint could not be reached or kept failing after retries."""


class AuthenticationError(BackendError):
    """The endpoint rejected our credentials."""


class ScriptExhaustedError(BackendError):
    """A scripted playlist has no entry left for the requested stage."""


class MissingImageError(PipelineError):
    """An image reference does not resolve to a readable file in the store."""


class NoPathFoundError(PipelineError):
    """Path sampling exhausted its retry budget without a valid path."""


class ChainError(PipelineError):
    """A chain execution step failed; carries the 1-based step index."""

    def __init__(self, step: int, stage: str, cause: Exception):
        super().__init__(f"step {step} ({stage}): {cause}")
        self.step = step
        self.stage = stage
        self.cause = cause
