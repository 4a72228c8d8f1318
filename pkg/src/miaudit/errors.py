"""Exception hierarchy shared by all miaudit modules."""

from __future__ import annotations


class MiauditError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MiauditError):
    """An input violates a documented invariant (non-finite values, duplicate
    ids, unknown membership tokens, inconsistent dimensions, ...)."""


class FormatError(MiauditError):
    """A file is not a well-formed miaudit artifact (bad magic, truncated
    payload, unsupported version)."""


class StorageError(MiauditError):
    """An underlying I/O operation failed."""


class DegenerateVectorError(ValidationError):
    """A zero-norm vector was passed to a cosine metric.

    Carries ``index`` so batch drivers can report which frame or utterance
    was degenerate.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class TooFewFramesError(MiauditError):
    """A sequence has fewer frames than the operation requires."""


class TooFewUtterancesError(MiauditError):
    """A speaker group has fewer utterances than the operation requires."""


class InsufficientDataError(MiauditError):
    """A selection or training step asked for more items than exist."""


class InsufficientPairsError(MiauditError):
    """A selected speaker cannot contribute any training pair (n < 2)."""


class EvaluationError(MiauditError):
    """A score table cannot be evaluated (e.g. only one class present)."""


class ConfigurationError(MiauditError):
    """Shapes, hyperparameters, or config files are inconsistent."""


class DataError(MiauditError):
    """Referenced data (feature files, ids) is missing or inconsistent."""
