"""Exception types shared across the package."""


class InputError(ValueError):
    """A caller-supplied array or label is malformed (shape, finiteness, hull)."""


class ConfigurationError(ValueError):
    """A configuration is inconsistent (bad kind, failed gate, missing field)."""


class CapacityError(RuntimeError):
    """A request exceeds an enumeration or iteration capacity limit."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Carries the last residual (marginal deviation, duality gap, ...) so
    callers can report how far the solve got.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GenerationError(RuntimeError):
    """A stream generator exhausted its sampling budget."""
