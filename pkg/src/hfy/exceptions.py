"""Exception types raised by the library."""


class InputError(ValueError):
    """Malformed or non-finite input data."""


class ParameterError(ValueError):
    """A parameter lies outside its valid domain."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None, n_iter=None):
        super().__init__(message)
        self.residual = residual
        self.n_iter = n_iter


class PatternGenerationError(RuntimeError):
    """Rejection sampling could not place the requested patterns."""
