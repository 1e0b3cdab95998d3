"""Exception hierarchy shared by the library and the CLI."""


class CardmulError(Exception):
    """Base class for all errors raised by cardmul."""


class ValidationError(CardmulError, ValueError):
    """Input violates a documented precondition."""


class DimensionMismatch(ValidationError):
    """Operand shapes are incompatible."""


class DomainError(ValidationError):
    """A value lies outside the admissible domain (e.g. a non-binary entry)."""


class CorruptionError(CardmulError, ValueError):
    """A compressed structure or container is internally inconsistent."""


class ModeError(ValidationError, IndexError):
    """A tensor mode index lies outside ``1..order``."""
