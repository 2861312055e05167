"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class AnnoloopError(Exception):
    """Base class for all domain errors raised by this package."""


class CorpusError(AnnoloopError):
    """Malformed corpus data: bad JSONL lines, duplicate ids, unknown labels."""


class SchemaError(AnnoloopError):
    """Invalid label schema or references to labels the schema does not define."""


class ClosureConflictError(SchemaError):
    """Applying implications would leave a mutual exclusion violated."""

    def __init__(self, message: str, offending: list[str]):
        super().__init__(message)
        self.offending = offending


class ParseError(AnnoloopError):
    """Model response does not follow the RATIONALE/SCORE protocol.

    ``code`` is ``missing_score`` when no score marker is present and
    ``invalid_score`` when the value after the marker is not 0 or 1.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class TransportError(AnnoloopError):
    """Backend could not be reached or failed at the transport level."""


class ClassificationError(AnnoloopError):
    """All parse-retry attempts were exhausted for one instance."""

    def __init__(self, message: str, last_response: str, attempts: int):
        super().__init__(message)
        self.last_response = last_response
        self.attempts = attempts


class RegistryError(AnnoloopError):
    """Prompt registry lookup, versioning, or draft state-machine failure."""


class SamplingError(AnnoloopError):
    """Invalid sampling parameters or insufficient data for a split."""


class MetricsError(AnnoloopError):
    """Invalid metric inputs, e.g. ragged rating matrices or empty counts."""


class WorkflowError(AnnoloopError):
    """Task/batch state-machine violation in the re-annotation workflow."""


class GatingError(WorkflowError):
    """Model output was requested before the human judgment was recorded."""


class ConfigError(AnnoloopError):
    """Invalid service or CLI configuration."""
