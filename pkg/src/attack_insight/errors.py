"""Exception hierarchy shared across the pipeline stages."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid or inconsistent pipeline configuration (names the field path)."""


# --- ingest ---------------------------------------------------------------


class ParseError(PipelineError):
    """A telemetry line that could not be admitted as an event."""

    def __init__(self, cause: str, line_no: int | None = None, source: str | None = None):
        self.cause = cause
        self.line_no = line_no
        self.source = source
        where = f"{source or '<line>'}:{line_no}" if line_no is not None else (source or "<line>")
        super().__init__(f"{where}: {cause}")


class IngestIOError(PipelineError):
    """An input file could not be read."""


# --- segmentation ---------------------------------------------------------


class JudgeError(PipelineError):
    """The segmentation judge's backend failed after retries; the stream is aborted.

    Carries the groups finalized before the failure so callers can persist
    them flagged as incomplete.
    """

    def __init__(self, message: str, partial_groups=None, trace=None):
        super().__init__(message)
        self.partial_groups = partial_groups or []
        self.trace = trace


class DecisionParseError(PipelineError):
    """Judge reply violated the decision schema even after one reprompt."""


# --- knowledge base -------------------------------------------------------


class BundleError(PipelineError):
    """The STIX bundle is missing required object types or is unreadable."""


class EmbedderMismatch(PipelineError):
    """Query or cache embedder does not match the index's embedder."""


class TechniqueNotFound(PipelineError):
    """Lookup of an unknown technique id."""


# --- mapping --------------------------------------------------------------


class AnnotationParseError(PipelineError):
    """Mapper reply violated the annotation schema even after one reprompt."""


# --- backends -------------------------------------------------------------


class BackendError(PipelineError):
    """Chat backend failed permanently (after any configured retries)."""


class AuthError(BackendError):
    """Backend rejected the request's credentials."""


class RateLimited(BackendError):
    """Backend returned a rate-limit response; retried internally."""


class BackendTimeout(BackendError):
    """Backend request timed out; retried internally."""


class CassetteMiss(BackendError):
    """Strict replay found no recorded reply for the request hash."""

    def __init__(self, request_hash: str):
        self.request_hash = request_hash
        super().__init__(f"no recorded reply for request_hash {request_hash}")


# --- scenario generation --------------------------------------------------


class ScriptError(PipelineError):
    """A scenario script is structurally invalid."""
