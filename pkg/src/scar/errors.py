"""Exception types shared across the package."""


class ScarError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ScarError):
    """Invalid scenario input: bad parameters, malformed initial state, etc."""


class GraphParseError(ValidationError):
    """Edge-list document could not be parsed; message names the offending line."""


class GraphValidationError(ValidationError):
    """Parsed graph violates an invariant (self-loop, duplicate edge, disconnected...)."""


class CapacityError(ScarError):
    """State space would exceed the configured size cap."""


class IllegalMoveError(ScarError):
    """A strategy or deviation plan produced a move outside the legal action set."""


class NonConvergenceError(ScarError):
    """Equilibrium sweep iteration hit its cap or cycled; carries a diagnostic report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotAnEquilibriumError(ScarError):
    """A converged profile failed exact best-response verification."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotApplicableError(ScarError):
    """A constructive procedure's precondition does not hold for this graph."""
