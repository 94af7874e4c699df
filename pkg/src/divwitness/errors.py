"""Exception hierarchy shared across the toolkit."""


class DivwitnessError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(DivwitnessError):
    """Operands have incompatible dimensions."""


class InvalidChannelError(DivwitnessError):
    """A map failed CPTP validation (residuals attached when available)."""

    def __init__(self, message, cp_residual=None, tp_residual=None):
        super().__init__(message)
        self.cp_residual = cp_residual
        self.tp_residual = tp_residual


class InvalidPovmError(DivwitnessError):
    """POVM elements are not PSD or do not sum to the identity."""


class InvalidStateError(DivwitnessError):
    """Density matrix is not PSD or not unit trace."""


class InvalidEnsembleError(DivwitnessError):
    """Ensemble probabilities or states are malformed."""


class NumericalFailureError(DivwitnessError):
    """A solver did not reach a decisive answer; diagnostics attached."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OrderingViolationError(DivwitnessError):
    """A propagator construction failed because the source channel is not
    more informative than the target."""
