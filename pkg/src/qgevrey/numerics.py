"""Grid primitives: real Gamma, ray samplings, spline interpolation, Jacobi quadrature.

Every other module builds on the objects defined here.  A function living on a
ray ``[0, inf) e^{i gamma}`` is stored as a :class:`RaySampling` (radii plus
complex values, with the implicit value ``0`` at the origin), and evaluated
between nodes by spline interpolation in ``log r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.special import roots_jacobi, roots_legendre

from .errors import DomainError, RangeError

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
GAMMA_MAX_ARG = 170.0


def _lanczos(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    # split the power so that t**(x+0.5) never overflows before exp(-t) is applied
    half = t ** ((x + 0.5) / 2.0)
    return _SQRT_2PI * half * math.exp(-t) * half * acc


def gamma_real(x: float) -> float:
    """Gamma function for real ``0 < x <= 170``.

    Raises
    ------
    DomainError
        If ``x`` is non-positive, not finite, or above the overflow guard.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma_real needs x > 0, got {x!r}")
    if x > GAMMA_MAX_ARG:
        raise DomainError(f"gamma_real argument {x!r} exceeds overflow guard {GAMMA_MAX_ARG}")
    if x.is_integer():
        return float(math.factorial(int(x) - 1))
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _lanczos(1.0 - x))
    return _lanczos(x)


def log_gamma_real(x: float) -> float:
    """``log(gamma_real(x))`` without the overflow guard (Stirling tail above 170)."""
    if x <= GAMMA_MAX_ARG:
        return math.log(gamma_real(x))
    return math.lgamma(x)


# --------------------------------------------------------------------------
# ray samplings
# --------------------------------------------------------------------------


DEFAULT_PER_DECADE = 48


def geometric_radii(r_max: float, r_min: float, per_decade: int = DEFAULT_PER_DECADE) -> np.ndarray:
    """Radii ``r_j = r_max * rho**(M - j)``, ``j = 0..M``, with ``per_decade`` nodes per decade."""
    if not (0.0 < r_min < r_max):
        raise DomainError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    m = max(int(math.ceil(math.log10(r_max / r_min) * per_decade)), 1)
    rho = (r_min / r_max) ** (1.0 / m)
    radii = r_max * rho ** np.arange(m, -1, -1, dtype=float)
    radii[-1] = r_max
    return radii


@dataclass(frozen=True)
class RaySampling:
    """Complex samples of a function on the ray of angle ``direction``.

    The value at the origin is always zero; below the smallest radius the
    samples are continued by a power law (see :func:`interpolate_ray`).
    """

    direction: float
    radii: np.ndarray
    values: np.ndarray
    value_at_zero: complex = field(default=0j)

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if radii.ndim != 1 or radii.shape != values.shape:
            raise DomainError("radii and values must be 1-D arrays of equal length")
        if radii.size < 2:
            raise DomainError("a ray sampling needs at least two nodes")
        if radii[0] <= 0.0 or np.any(np.diff(radii) <= 0.0):
            raise DomainError("radii must be positive and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DomainError("ray sampling contains non-finite values")
        if self.value_at_zero != 0:
            raise DomainError("value_at_zero must be 0")
        radii.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def points(self) -> np.ndarray:
        return self.radii * np.exp(1j * self.direction)

    @classmethod
    def from_function(cls, func, direction, radii):
        radii = np.asarray(radii, dtype=float)
        return cls(direction, radii, func(radii * np.exp(1j * direction)))

    def __call__(self, r, order: int = 3):
        return interpolate_ray(self, r, order=order)


@dataclass(frozen=True)
class DiscSampling:
    """Samples of a function at points of the closed disc of radius ``radius``."""

    radius: float
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=complex)
        values = np.asarray(self.values, dtype=complex)
        if nodes.shape != values.shape:
            raise DomainError("nodes and values must have equal shape")
        if self.radius <= 0:
            raise DomainError("disc radius must be positive")
        if np.any(np.abs(nodes) > self.radius * (1 + 1e-12)):
            raise DomainError("disc node outside the disc")
        if not np.all(np.isfinite(values)):
            raise DomainError("disc sampling contains non-finite values")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_rays(cls, radius: float, rays) -> "DiscSampling":
        nodes, values = [], []
        for ray in rays:
            keep = ray.radii <= radius * (1 + 1e-12)
            nodes.append(ray.points[keep])
            values.append(ray.values[keep])
        return cls(radius, np.concatenate(nodes), np.concatenate(values))


_SPLINES: dict = {}


def _spline(xs: np.ndarray, ys: np.ndarray, degree: int):
    key = (id(xs), id(ys), degree)
    hit = _SPLINES.get(key)
    if hit is not None and hit[0] is xs and hit[1] is ys:
        return hit[2]
    if len(_SPLINES) > 4096:
        _SPLINES.clear()
    sp = make_interp_spline(np.log(xs), ys, k=degree)
    _SPLINES[key] = (xs, ys, sp)
    return sp


def interpolate_ray(f: RaySampling, r, order: int = 3):
    """Interpolate a ray sampling at radii ``r``.

    An interpolating spline of degree ``order`` in ``log r`` (exact at the
    nodes; built once per sampling) covers the sampled range.  Below the
    first node the sampled function, which vanishes at the origin, is
    continued by the power law ``v_0 (r / r_0)^m`` whose exponent matches the
    log-slope of the first two nodes.  Scalars in, scalar out.

    Raises
    ------
    RangeError
        If some ``r`` is negative or beyond the largest sampled radius.
    """
    scalar = np.ndim(r) == 0
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    shape = r_arr.shape
    r_flat = r_arr.ravel()
    if order < 1:
        raise DomainError("interpolation order must be >= 1")
    if r_flat.size and (r_flat.min() < 0.0 or r_flat.max() > f.r_max * (1.0 + 1e-12)):
        bad = r_flat.max() if r_flat.max() > f.r_max else r_flat.min()
        raise RangeError(f"radius {bad!r} outside sampled range [0, {f.r_max!r}]")
    xs, ys = f.radii, f.values
    out = np.zeros(r_flat.shape, dtype=complex)
    low = r_flat < xs[0]
    if np.any(low):
        out[low] = ys[0] * (r_flat[low] / xs[0]) ** _origin_exponent(xs, ys)
    hi = ~low
    if np.any(hi):
        sp = _spline(xs, ys, min(order, xs.size - 1))
        out[hi] = sp(np.log(np.minimum(r_flat[hi], xs[-1])))
    out = out.reshape(shape)
    return complex(out[0]) if scalar else out


def _origin_exponent(xs, ys) -> float:
    if xs.size < 2 or ys[0] == 0 or ys[1] == 0:
        return 1.0
    m = math.log(abs(ys[1] / ys[0])) / math.log(xs[1] / xs[0])
    if abs(m - round(m)) < 0.25:
        m = float(round(m))
    return max(m, 1.0)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------


@lru_cache(maxsize=256)
def gauss_legendre01(n: int):
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=256)
def _gauss_jacobi(n: int, a: float):
    # weight (1-x)^a on [-1, 1]
    return roots_jacobi(n, a, 0.0)


def composite_legendre(breakpoints, order: int = 16):
    """Nodes and weights of composite Gauss-Legendre on consecutive breakpoints."""
    b = np.asarray(breakpoints, dtype=float)
    x0, w0 = gauss_legendre01(order)
    lo, hi = b[:-1, None], b[1:, None]
    nodes = (lo + (hi - lo) * x0[None, :]).ravel()
    weights = ((hi - lo) * w0[None, :]).ravel()
    return nodes, weights


def jacobi_rule(alpha: float, power: int = 1, panels: int = 1, order: int = 16):
    """Nodes ``tau`` and weights for ``int_0^1 (1 - tau)^(alpha - 1) g(tau) dtau``.

    The substitution ``tau = sigma**power`` removes a ``tau**(1/power - 1)``
    singularity at the origin; ``sigma`` is then split into ``panels`` equal
    pieces, Gauss-Legendre on all but the last, Gauss-Jacobi on the last one
    (which carries the algebraic endpoint weight).  Returned weights already
    include the weight function and the Jacobian, so the integral is
    ``sum(w * g(tau))``.
    """
    if alpha <= 0:
        raise DomainError(f"jacobi weight exponent needs alpha > 0, got {alpha!r}")
    if power < 1 or panels < 1:
        raise DomainError("power and panels must be positive integers")
    return _jacobi_rule_cached(float(alpha), int(power), int(panels), int(order))


@lru_cache(maxsize=4096)
def _jacobi_rule_cached(alpha, power, panels, order):
    edges = np.linspace(0.0, 1.0, panels + 1)
    sig_parts, w_parts = [], []
    if panels > 1:
        s, w = composite_legendre(edges[:-1], order)
        w = w * (1.0 - s**power) ** (alpha - 1.0)
        sig_parts.append(s)
        w_parts.append(w)
    a = edges[-2]
    xj, wj = _gauss_jacobi(order, alpha - 1.0)
    half = (1.0 - a) / 2.0
    s = a + half * (xj + 1.0)
    # (1 - s^p)^(alpha-1) = (1 - s)^(alpha-1) * (1 + s + ... + s^(p-1))^(alpha-1)
    smooth = np.polynomial.polynomial.polyval(s, np.ones(power)) ** (alpha - 1.0)
    sig_parts.append(s)
    w_parts.append(half**alpha * wj * smooth)
    sigma = np.concatenate(sig_parts)
    weights = np.concatenate(w_parts) * power * sigma ** (power - 1)
    tau = sigma**power
    tau.setflags(write=False)
    weights.setflags(write=False)
    return tau, weights, sigma


def integrate_jacobi(
    g: Callable[[np.ndarray], np.ndarray],
    alpha: float,
    *,
    power: int = 1,
    panels: int = 1,
    order: int = 16,
):
    """Compute ``int_0^1 (1 - tau)^(alpha - 1) g(tau) dtau``.

    ``g`` is called once with the 1-D array of nodes and may return an array
    with extra leading batch axes (last axis = nodes); the result then has
    the batch shape.  Use ``power = k`` when ``g`` behaves like
    ``tau**(j/k - 1)`` near the origin.
    """
    tau, weights, _ = jacobi_rule(alpha, power=power, panels=panels, order=order)
    vals = np.asarray(g(tau))
    out = vals @ weights
    return complex(out) if np.ndim(out) == 0 else out


def ratio_tail(terms) -> float:
    """Geometric extrapolation of ``sum_{n > N} a_n`` from the last three nonzero ``(n, a_n)``.

    Returns ``inf`` when the estimated ratio is at least one and 0 when fewer
    than three nonzero terms are available.
    """
    terms = [(n, a) for n, a in terms if a != 0]
    if len(terms) < 3:
        return 0.0
    (n1, a1), (n2, a2), (n3, a3) = terms[-3:]
    rho = math.sqrt((a2 / a1) ** (1.0 / (n2 - n1)) * (a3 / a2) ** (1.0 / (n3 - n2)))
    if rho >= 1:
        return float("inf")
    rs = rho ** (n3 - n2)
    return a3 * rs / (1 - rs)
