"""
Exception hierarchy for the PD-MPC flood-control engine.

Input problems derive from ValidationError (CLI exit status 2). Solver trouble is
raised as NumericalFailure / NotOptimalError and is turned into flagged fallbacks by
the controller rather than aborting a run.
"""


class ReservoirControlError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ReservoirControlError, ValueError):
    """Malformed input: config, event file, series lengths, genes."""


class ConfigError(ValidationError):
    """Unknown or invalid key in a run configuration file."""


class EventParseError(ValidationError):
    """An event CSV row could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EventValidationError(ValidationError):
    """An event CSV parsed but violates the event invariants."""


class LengthMismatchError(ValidationError):
    """Series that must align have different lengths."""


class InconsistentLengthsError(LengthMismatchError):
    """MPC build inputs disagree on the horizon length."""


class GeneOutOfRangeError(ValidationError):
    """A chromosome gene lies outside its search range."""


class EmptyTraceError(ValidationError):
    """Metrics were requested for a trace without steps."""


class OutOfRangeError(ReservoirControlError, ValueError):
    """A level or storage lies outside the stage-storage curve."""


class StateOutOfRangeError(OutOfRangeError):
    """The reservoir state handed to the MPC builder is outside the curve range."""


class NegativeStorageError(ReservoirControlError, ValueError):
    """A mass-balance step would drive storage below zero."""


class IndexOutOfRangeError(ReservoirControlError, IndexError):
    """A time index lies outside an inflow series."""


class HorizonExceedsSeriesError(ReservoirControlError, ValueError):
    """A forecast horizon runs past the end of the inflow series."""


class NumericalFailure(ReservoirControlError, ArithmeticError):
    """The simplex iteration guard tripped or the final solution failed its residual check."""


class NotOptimalError(ReservoirControlError, ValueError):
    """A schedule was requested from an LP solution that is not optimal."""


class OutputError(ReservoirControlError, OSError):
    """An output file could not be written."""
