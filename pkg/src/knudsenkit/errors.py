"""Exception types shared across the toolkit."""


class KnudsenKitError(Exception):
    """Base class for toolkit errors."""


class ConfigurationError(KnudsenKitError, ValueError):
    """Invalid parameters, unsupported model kinds, bad config files."""


class NumericalError(KnudsenKitError, ArithmeticError):
    """Singular systems, failed convergence, positivity loss."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DegenerateStateError(NumericalError):
    """Vacuum or non-physical cell state."""


class StepSizeError(KnudsenKitError, ValueError):
    """Time step violates a stability restriction."""


class PreconditionError(KnudsenKitError, ValueError):
    """An operation's stated precondition does not hold."""
