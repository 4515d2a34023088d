"""Exception hierarchy shared by every pipeline module.

All domain failures derive from CurationError so the CLI can map them to
exit code 1 and print one machine-parsable error record.
"""

from __future__ import annotations

from typing import Any


class CurationError(Exception):
    """Base class for domain errors raised anywhere in the pipeline."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_record(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class ManifestError(CurationError):
    """Unparseable or structurally invalid line-delimited record file."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None, **details: Any):
        super().__init__(message, path=path, line=line, **details)
        self.path = path
        self.line = line


class ConfigError(CurationError):
    pass


class IngestError(CurationError):
    pass


class BuildError(CurationError):
    pass


class CurriculumError(CurationError):
    pass


class PlannerError(CurationError):
    pass


class MetricError(CurationError):
    pass


class BenchError(CurationError):
    pass


class ServiceError(CurationError):
    pass
