"""Exception types shared across the library."""


class SscmError(Exception):
    """Base class for all library-specific failures."""


class ConvergenceError(SscmError):
    """An iterative solver ran out of iterations.

    Carries the last iterate and the residual reached so callers can
    inspect or restart.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class NumericError(SscmError):
    """A numerical procedure (quadrature, branch tracking) failed."""

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class UnsupportedConfigError(SscmError):
    """The requested computation is undefined for the given inputs."""
