"""Exception hierarchy shared by all ripple modules."""


class RippleError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(RippleError, ValueError):
    """Invalid grid dimensions, study configuration or CLI options."""


class DomainError(RippleError, ValueError):
    """A scalar parameter lies outside the admissible range."""


class InvariantViolation(RippleError):
    """A field or multiplier breaks a structural invariant (e.g. Hermitian symmetry)."""


class GridMismatchError(RippleError, ValueError):
    """Two fields living on different grids were combined."""


class NonContractionError(RippleError):
    """Picard iteration stopped contracting.

    The iterate-change history is kept on the exception so callers can
    inspect where the divergence set in.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)
