"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ValidationError -> 1 (bad data, bad
values, mismatched dimensions or fingerprints), FormatError and OSError -> 2
(missing, corrupt, or truncated files).
"""


class LLMRankError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LLMRankError):
    """Input data or configuration violates a documented invariant."""


class FormatError(LLMRankError):
    """A binary artifact is corrupt: bad magic, truncated payload, etc."""


class TrainingDiverged(LLMRankError):
    """Training produced a non-finite loss; carries epoch/batch coordinates."""

    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
