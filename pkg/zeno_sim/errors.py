"""Exceptions raised by the simulation, theory and CLI layers."""


class ZenoError(Exception):
    """Base class for all errors raised by zeno_sim."""


class DivergentPeriodError(ZenoError):
    """A mean period is infinite (eigenstate input, p̃ = 0 or q̃ = 1)."""


class InsufficientDataError(ZenoError):
    """Too few complete periods to extract or report statistics."""


class JumpTimeError(ZenoError):
    """The waiting-time root finder could not locate a jump time."""


class MasterEquationError(ZenoError):
    """The integrated density matrix left its invariant tolerances."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class RecordMismatchError(ZenoError):
    """An emission record does not belong to the given schedule or grid."""


class RecordParseError(ZenoError):
    """A CSV or JSON artifact could not be parsed."""


class ConfigError(ZenoError):
    """The run configuration failed validation."""
