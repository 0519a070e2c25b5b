"""Exception types shared across the toolkit."""


class DysalignError(Exception):
    """Base class for all toolkit errors."""


class InventoryError(DysalignError):
    """A symbol is not part of the phoneme inventory."""


class ValidationError(DysalignError):
    """Malformed input data (config values, corpus lines, file formats)."""


class AlignError(DysalignError):
    """Aligner preconditions violated (level mismatch, empty input)."""


class AlignmentError(DysalignError):
    """A gold alignment structure violates its invariants."""


class CodecError(DysalignError):
    """Label sequences cannot be decoded into an alignment."""


class OracleError(DysalignError):
    """A test oracle was asked to run outside its size guard."""


class ModelError(DysalignError):
    """Neural model misuse (empty sequence, bad checkpoint, over-length input)."""


class TrainError(DysalignError):
    """Training diverged or was misconfigured."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class EvalError(DysalignError):
    """Evaluation inputs are inconsistent (e.g. prediction/gold id mismatch)."""
