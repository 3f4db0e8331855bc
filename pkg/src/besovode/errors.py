"""Exception types shared across the package."""


class BesovodeError(Exception):
    """Base class for all package-specific errors."""


class GridAlignmentError(BesovodeError, ValueError):
    """A time does not coincide with a grid node."""


class DomainError(BesovodeError, ValueError):
    """An argument lies outside the mathematically admissible range."""


class UnsupportedIndexError(BesovodeError, ValueError):
    """A smoothness/integrability index triple is outside every supported regime."""


class ShapeError(BesovodeError, ValueError):
    """Incompatible value dimensions."""


class WindowUnderflowError(BesovodeError, RuntimeError):
    """Window selection shrank below the minimum window without contraction."""


class ExpressionError(BesovodeError, ValueError):
    """Parse or evaluation failure in the inline expression grammar."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ConfigError(BesovodeError, ValueError):
    """Invalid run configuration; carries the offending key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")
