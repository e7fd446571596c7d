"""Exception types shared across the package."""

from __future__ import annotations


class PhotocensusError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PhotocensusError, ValueError):
    """Invalid input data: parse failures, broken invariants, bad references."""


class ParseError(DataError):
    """Malformed record stream; carries the 1-based line number."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class UsageError(PhotocensusError):
    """Bad command-line invocation (maps to exit code 1)."""


class StageError(PhotocensusError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class NoIndividualsError(DataError):
    """Signal that a source collection sights no individuals and must be
    excluded from share-label training."""
