"""Exception types shared across the package."""

from __future__ import annotations


class RingposeError(Exception):
    """Base class for all domain errors."""


class ConfigurationError(RingposeError):
    """Invalid hand/rig/mount configuration (degenerate geometry, bad bounds)."""


class InputError(RingposeError):
    """Caller supplied data that violates an operation's preconditions."""


class TrainingError(RingposeError):
    """Classifier training cannot proceed (missing class, bad hyperparameter)."""


class ModelFormatError(RingposeError):
    """Model file is malformed or truncated."""


class ModelVersionError(ModelFormatError):
    """Model file carries an unsupported version."""


class DatasetError(RingposeError):
    """Dataset file violates the JSONL schema; carries the offending line."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}: "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class ProtocolError(RingposeError):
    """Malformed or unknown protocol message."""
