"""Exception hierarchy shared by all modules."""


class QGevreyError(Exception):
    """Base class for every error raised by the package."""


class DomainError(QGevreyError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(QGevreyError, ValueError):
    """Evaluation requested outside the sampled range of a grid function."""


class SmallDivisorError(QGevreyError, ArithmeticError):
    """|P(k u^k)| fell below the configured small-divisor floor."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DirectionError(QGevreyError, ValueError):
    """Laplace direction has a non-positive (or too small) cosine margin."""


class InfeasibleDirectionError(QGevreyError, ValueError):
    """No ray inside a Borel sector yields a positive cosine margin."""


class AdmissibilityError(QGevreyError, ValueError):
    """A geometric configuration violates the admissibility conditions."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ResourceError(QGevreyError, RuntimeError):
    """A grid would exceed the configured resource caps."""


class InsufficientDataError(QGevreyError, ValueError):
    """Too few usable samples for a fit."""


class PreconditionError(QGevreyError, ValueError):
    """A documented precondition of an operation does not hold."""


class ArtifactError(QGevreyError, FileNotFoundError):
    """A pipeline stage needs artifacts from an earlier stage that are missing or stale."""
