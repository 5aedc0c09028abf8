"""Order-k Laplace transform along rays and its operational identities.

``L_k(f)(T) = k int_{L_gamma} f(u) exp(-(u/T)^k) du/u``.  With ``u = |T| y e^{i gamma}``
the integral becomes ``k int f(|T| y e^{i gamma}) exp(-y^k e^{i k theta}) dy/y``,
``theta = gamma - arg T``, which is integrated by Gauss-Legendre panels:
geometric toward ``y = 0`` and of width adapted to ``exp(-y^k)`` beyond.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import DirectionError, DomainError, PreconditionError, RangeError
from .numerics import RaySampling, gamma_real, gauss_legendre01, interpolate_ray, jacobi_rule

DEFAULT_DELTA1 = 1e-2
DEFAULT_TOL = 1e-13
QUAD_ORDER = 16
# widest Gauss panel in the scaled variable y = |u| / |T|
PANEL_WIDTH = 2.0


def _evaluator(f, gamma: float, order: int = 7):
    """Turn ``f`` into a function of radii ``r`` along direction ``gamma``."""
    if isinstance(f, RaySampling):
        if abs(math.remainder(f.direction - gamma, 2 * math.pi)) > 1e-12:
            raise DirectionError("ray sampling direction differs from the integration direction")

        def ev(r):
            return interpolate_ray(f, r, order=order)

        return ev, f.r_max
    e = np.exp(1j * gamma)

    def ev(r):
        return np.asarray(f(np.asarray(r) * e), dtype=complex)

    return ev, np.inf


def _panels(s_cut: float, y_lo: float, k: int, from_zero: bool):
    bps = [0.0]
    if from_zero:
        bps = [0.0] + [2.0**-j for j in range(24, 0, -1)]
    s = bps[-1] if from_zero else 0.0
    if not from_zero:
        s = 0.0
    while s < s_cut:
        y = y_lo + s
        w = min(PANEL_WIDTH, 6.0 / (k * max(y, 1.0) ** (k - 1)))
        s = min(s + w, s_cut)
        bps.append(s)
    b = np.unique(np.asarray(bps))
    x0, w0 = gauss_legendre01(QUAD_ORDER)
    lo, hi = b[:-1, None], b[1:, None]
    return (lo + (hi - lo) * x0).ravel(), ((hi - lo) * w0).ravel()


def laplace_ray(
    f,
    k: int,
    gamma: float,
    T,
    *,
    r_lo: float = 0.0,
    tol: float = DEFAULT_TOL,
    delta1: float = DEFAULT_DELTA1,
    interp_order: int = 7,
    check_growth: bool = True,
):
    """Order-``k`` Laplace transform of ``f`` along ``gamma``, evaluated at ``T``.

    ``f`` is a :class:`RaySampling` on direction ``gamma`` or a vectorised
    callable of complex ``u``.  ``T`` may be an array.  With ``r_lo > 0`` only
    the tail ``|u| >= r_lo`` of the ray is integrated.  The cut radius is grown
    until the integrand at the cut is below ``tol`` relative to the result.

    Raises
    ------
    DirectionError
        If ``cos(k (gamma - arg T)) < delta1``.
    RangeError
        If a ray sampling is too short; the message names the needed radius.
    """
    scalar = np.ndim(T) == 0
    Ts = np.atleast_1d(np.asarray(T, dtype=complex)).ravel()
    if np.any(Ts == 0):
        raise DomainError("Laplace transform needs T != 0")
    theta = gamma - np.angle(Ts)
    cosm = np.cos(k * theta)
    if np.any(cosm < delta1):
        bad = Ts[int(np.argmin(cosm))]
        raise DirectionError(
            f"cos(k(gamma - arg T)) = {cosm.min():.6g} below delta1 = {delta1:g} for T = {bad!r}"
        )
    ev, r_max = _evaluator(f, gamma, interp_order)
    aT = np.abs(Ts)
    y_lo = r_lo / aT
    rot = np.exp(1j * k * theta)
    if check_growth and isinstance(f, RaySampling):
        _check_growth(f, k, aT.max(), cosm.min())
    # initial cut: exp(-c (y^k - y_lo^k)) <= tol
    need = np.log(1.0 / tol)
    s_cut = float(np.max((y_lo**k + need / cosm) ** (1.0 / k) - y_lo))
    for _ in range(12):
        s, w = _panels(s_cut, float(y_lo.max()), k, r_lo == 0.0)
        y = y_lo[:, None] + s[None, :]
        r = aT[:, None] * y
        if r.max() > r_max * (1 + 1e-12):
            raise RangeError(f"ray sampling reaches {r_max:.6g} but the transform needs radius {r.max():.6g}")
        vals = ev(r.ravel()).reshape(r.shape)
        kern = np.exp(-(y**k) * rot[:, None] + (y_lo**k * cosm)[:, None])
        integrand = k * vals * kern / y
        out = (integrand @ w) * np.exp(-(y_lo**k) * cosm)
        # tail check at the cut: integrand magnitude times its decay length
        yend = y[:, -1]
        tail = np.abs(integrand[:, -1]) * np.exp(-(y_lo**k) * cosm) / (k * cosm * np.maximum(yend, 1.0) ** (k - 1))
        if np.all(tail <= tol * np.maximum(np.abs(out), 1e-300)) or np.all(out == 0):
            break
        s_cut *= 1.5
    else:
        raise RangeError("Laplace truncation did not converge; the integrand is not decaying")
    return complex(out[0]) if scalar else out.reshape(np.shape(T))


def _check_growth(f: RaySampling, k: int, aT: float, cosm: float) -> None:
    r = f.radii
    mag = np.abs(f.values)
    ref = mag[r <= 1.0].max() if np.any(r <= 1.0) else mag[0]
    big = (r > 1.0) & (mag > 0)
    if ref == 0 or not np.any(big):
        return
    K = float(np.max(np.log(mag[big] / ref) / r[big] ** k))
    if K >= cosm / aT**k:
        raise PreconditionError(f"samples grow like exp({K:.3g} r^k), too fast for |T| = {aT:.3g}")


def laplace_cut_radius(k: int, T_abs: float, margin: float, tol: float = DEFAULT_TOL, factor: float = 1.25) -> float:
    """Radius beyond which ``exp(-margin (r/|T|)^k)`` is below ``tol`` (with a safety factor)."""
    return factor * T_abs * (math.log(1.0 / tol) / margin) ** (1.0 / k)


# --------------------------------------------------------------------------
# convolution
# --------------------------------------------------------------------------


def conv_star(m: int, f, k: int, u, *, h_cap: float = 0.25, order: int = 16):
    """``u^m *_k f = u^m / Gamma(m/k) int_0^1 (1 - tau)^(m/k - 1) f(u tau^(1/k)) dtau / tau``.

    ``f`` is a vectorised callable of complex arguments (``f(0) = 0``).
    """
    if int(m) != m or m <= 0:
        raise DomainError(f"convolution order m must be a positive integer, got {m!r}")
    scalar = np.ndim(u) == 0
    us = np.atleast_1d(np.asarray(u, dtype=complex)).ravel()
    alpha = m / k
    out = np.zeros(us.shape, dtype=complex)
    panels = np.maximum(1, np.ceil(np.abs(us) / h_cap)).astype(int)
    for npan in np.unique(panels):
        sel = panels == npan
        tau, w, sigma = jacobi_rule(alpha, power=k, panels=int(npan), order=order)
        vals = np.asarray(f(us[sel, None] * sigma[None, :]), dtype=complex)
        out[sel] = us[sel] ** m / gamma_real(alpha) * ((vals / tau[None, :]) @ w)
    return complex(out[0]) if scalar else out.reshape(np.shape(u))


# --------------------------------------------------------------------------
# identity checks
# --------------------------------------------------------------------------


def _rel(a, b) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else float(abs(a - b) / scale)


def check_monomial_identity(h: int, k: int, T: complex) -> float:
    """Relative residual of ``L_k(u^h)(T) = Gamma(h/k) T^h``."""
    T = complex(T)
    val = laplace_ray(lambda u: u**h, k, float(np.angle(T)), T)
    exact = gamma_real(h / k) * T**h
    return float(abs(val - exact) / abs(exact))


def _dT(F: Callable[[complex], complex], T: complex, step: float) -> complex:
    e = np.exp(1j * np.angle(T))

    def central(hh):
        d = hh * e
        return (F(T + d) - F(T - d)) / (2 * d)

    return (4 * central(step / 2) - central(step)) / 3


def check_derivative_identity(f, k: int, T: complex, step: float | None = None) -> float:
    """Relative residual of ``L_k(k u^k f)(T) = T^(k+1) d/dT L_k(f)(T)``."""
    T = complex(T)
    gam = float(np.angle(T))
    step = 1e-2 * abs(T) if step is None else step
    lhs = laplace_ray(lambda u: k * u**k * f(u), k, gam, T)
    rhs = T ** (k + 1) * _dT(lambda s: laplace_ray(f, k, gam, s), T, step)
    return _rel(lhs, rhs)


def check_dilation_identity(f, k: int, delta: int, q: float, T: complex, K: float = 1.0, delta1: float | None = None) -> float:
    """Relative residual of ``L_k(f(q^delta u))(T) = L_k(f)(q^delta T)``.

    ``f`` is assumed to satisfy ``|f(u)| <= C exp(K |u|^k)``; the identity is
    only asserted for ``|T|^k < delta1 / (K q^(k delta))`` with ``delta1`` the
    cosine margin (1 on the aligned ray).
    """
    T = complex(T)
    gam = float(np.angle(T))
    d1 = 1.0 if delta1 is None else delta1
    limit = d1 / (K * q ** (k * delta))
    if not abs(T) ** k < limit:
        raise PreconditionError(f"|T|^k = {abs(T) ** k:.6g} violates the dilation radius constraint {limit:.6g}")
    qd = q**delta
    lhs = laplace_ray(lambda u: f(qd * u), k, gam, T)
    rhs = laplace_ray(f, k, gam, qd * T)
    return _rel(lhs, rhs)


def check_convolution_identity(m: int, f, k: int, T: complex) -> float:
    """Relative residual of ``L_k(u^m *_k f)(T) = T^m L_k(f)(T)``."""
    T = complex(T)
    gam = float(np.angle(T))
    lhs = laplace_ray(lambda u: conv_star(m, f, k, u), k, gam, T)
    rhs = T**m * laplace_ray(f, k, gam, T)
    return _rel(lhs, rhs)
