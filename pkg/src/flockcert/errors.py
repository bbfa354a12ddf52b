"""Exception types shared across the package."""


class FlockcertError(Exception):
    """Base class for all package-specific errors."""


class DivergentMoment(FlockcertError):
    """An exponential or mixed moment was requested outside its convergence domain."""


class InvalidOrder(FlockcertError):
    """Quadrature order below 1."""


class NegativeDistance(FlockcertError):
    """Communication rate evaluated at a negative distance."""


class DomainViolation(FlockcertError):
    """Input outside the documented domain of a threshold or curve."""


class ConfigInvalid(FlockcertError):
    """Simulation configuration violates a structural constraint."""


class NonFiniteState(FlockcertError):
    """Integration aborted because the state blew up or became non-finite.

    Carries the partial trajectory and diagnostics collected before the abort.
    """

    def __init__(self, message, history=None, diagnostics=None):
        super().__init__(message)
        self.history = history
        self.diagnostics = diagnostics


class HistoryUnderflow(FlockcertError):
    """An interpolation query fell outside the stored trajectory.

    With correct constant pre-history handling this indicates an internal
    defect, not a user error.
    """


class DegenerateWindow(FlockcertError):
    """Decay-rate fit window has too few samples or touches V = 0."""
