"""Numerical lab for Borel-Laplace sectorial solutions of singularly perturbed q-difference-differential problems."""

from .errors import (
    AdmissibilityError,
    DirectionError,
    DomainError,
    InfeasibleDirectionError,
    InsufficientDataError,
    PreconditionError,
    QGevreyError,
    RangeError,
    ResourceError,
    SmallDivisorError,
)
from .numerics import DiscSampling, RaySampling, gamma_real, integrate_jacobi, interpolate_ray

__version__ = "0.1.0"
