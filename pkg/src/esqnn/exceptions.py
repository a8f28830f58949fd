"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid hyperparameter, size or structural setting."""


class DegenerateInputError(ValueError):
    """Input that cannot be mapped to a valid quantum state (e.g. zero vector)."""


class NumericalError(ArithmeticError):
    """An objective returned a non-finite value.

    Attributes:
        point: the input at which the objective misbehaved.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class IdxFormatError(ValueError):
    """Malformed IDX container. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
