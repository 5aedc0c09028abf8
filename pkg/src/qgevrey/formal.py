"""Exact Taylor data of the Borel coefficients at the origin.

Every coefficient ``omega_n(u, eps)`` is holomorphic near ``u = 0`` with a
Taylor expansion ``sum_{m, j} c[n][m, j] u^m eps^j``.  The recursion acts on
these arrays by dilation (``c_m -> q^(l3 m) c_m``), shifts (multiplication
by ``u^(k l1)``), the monomial convolution rule
``u^l0 *_k u^j = Gamma(j/k) / Gamma((j + l0)/k) u^(j + l0)`` and division by
the power series of ``P(k u^k)``.  The order-k Laplace transform maps
``u^m`` to ``Gamma(m/k) T^m``, so these arrays also give the formal
expansions of the sectorial solutions in ``eps`` or ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .geometry import roots_of_borel_symbol
from .numerics import log_gamma_real
from .problem import ProblemSpec


def _gamma_ratio(a: float, b: float) -> float:
    return math.exp(log_gamma_real(a) - log_gamma_real(b))


def inverse_symbol_series(spec: ProblemSpec, M: int) -> np.ndarray:
    """Taylor coefficients of ``1 / P(k u^k)`` up to ``u^M``."""
    k = spec.k
    p = np.zeros(M + 1, dtype=complex)
    for i, c in enumerate(spec.P):
        if i * k <= M:
            p[i * k] += c * k**i
    inv = np.zeros(M + 1, dtype=complex)
    inv[0] = 1.0 / p[0]
    for m in range(1, M + 1):
        inv[m] = -np.dot(p[1 : m + 1], inv[m - 1 :: -1][:m]) / p[0]
    return inv


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # a: (M+1, J+1) in (u, eps); b: (M+1,) in u
    M = a.shape[0] - 1
    out = np.zeros_like(a)
    for m in range(M + 1):
        out[m] = np.tensordot(b[m::-1], a[: m + 1], axes=(0, 0)) if m else b[0] * a[0]
    return out


@dataclass(frozen=True)
class TaylorData:
    """``coeffs[n][m, j]``: coefficient of ``u^m eps^j`` in ``omega_n``."""

    k: int
    coeffs: tuple

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    @property
    def M(self) -> int:
        return self.coeffs[0].shape[0] - 1

    def at_eps(self, n: int, eps: complex) -> np.ndarray:
        """Taylor coefficients in ``u`` of ``omega_n(., eps)``."""
        c = self.coeffs[n]
        return c @ (eps ** np.arange(c.shape[1]))

    def evaluate(self, n: int, u, eps: complex, m_max: int | None = None):
        c = self.at_eps(n, eps)
        if m_max is not None:
            c = c[: m_max + 1]
        return np.polynomial.polynomial.polyval(np.asarray(u, dtype=complex), c)

    def tail(self, n: int, u, eps: complex, m_min: int):
        """``sum_{m >= m_min} c_m(eps) u^m`` (no cancellation for small ``u``)."""
        c = self.at_eps(n, eps).copy()
        c[:m_min] = 0
        return np.polynomial.polynomial.polyval(np.asarray(u, dtype=complex), c)

    def remainder_coeffs(self, n: int, eps: complex, N: int, combined: bool = True) -> np.ndarray:
        """Taylor coefficients in ``u`` of ``omega_n`` minus its order-``N`` truncation.

        With ``combined`` the truncation drops the terms ``u^m eps^j`` with
        ``m + j <= N`` (expansion in ``eps`` at ``T = eps t``); otherwise the
        terms with ``m <= N`` (expansion in ``t``).
        """
        c = self.coeffs[n]
        m = np.arange(c.shape[0])[:, None]
        j = np.arange(c.shape[1])[None, :]
        keep = (m + j > N) if combined else np.broadcast_to(m > N, c.shape)
        return (c * keep) @ (eps ** np.arange(c.shape[1]))

    def watson(self, n: int) -> np.ndarray:
        """``Gamma(m/k) c[n][m, j]`` (zero for ``m = 0``): formal Laplace images."""
        c = self.coeffs[n]
        g = np.array([0.0] + [math.exp(log_gamma_real(m / self.k)) for m in range(1, c.shape[0])])
        return c * g[:, None]


def taylor_coefficients(spec: ProblemSpec, N: int, M: int) -> TaylorData:
    """Exact (floating point) Taylor arrays of ``omega_0 .. omega_N`` up to ``u^M``."""
    if N < 0 or M < 1:
        raise DomainError("need N >= 0 and M >= 1")
    k, S, q = spec.k, spec.S, spec.q
    if spec.literal_l0_exponent and float(spec.k1) != int(spec.k1):
        raise PreconditionError("the literal l0 = 0 exponent needs an integer k1 for Taylor arithmetic")
    # eps-degree bound: data degree plus accumulated prefactor degrees
    jmax = 0
    for d in spec.cauchy.polys.values():
        for poly in d.values():
            jmax = max(jmax, len(poly) - 1)
    step = 0
    for t in spec.terms:
        pre = t.delta if t.l0 == 0 else t.delta - t.l0
        step = max(step, pre + max((len(c) - 1 for c in t.coeffs.values()), default=0))
    J = min(jmax + step * (N + 1), 64)
    inv = inverse_symbol_series(spec, M)
    coeffs = []
    for j in range(S):
        a = np.zeros((M + 1, J + 1), dtype=complex)
        for h, poly in spec.cauchy.get(j).items():
            if h <= M:
                a[h, : len(poly)] += poly
        coeffs.append(a)
    m_idx = np.arange(M + 1)
    for n in range(0, N - S + 1):
        acc = np.zeros((M + 1, J + 1), dtype=complex)
        for t in spec.terms:
            l0, l1, l2, l3 = t.ell
            exp_k = spec.k1 if (spec.literal_l0_exponent and l0 == 0) else k
            shift = int(round(exp_k * l1))
            for h, poly in t.coeffs.items():
                if h > n:
                    continue
                src = coeffs[n - h + l2]
                fac = math.factorial(n) / math.factorial(n - h)
                # g(v) = (k q^(k l3) v^k)^l1 omega_src(q^l3 v), resp. with exp_k for l0 = 0
                g = np.zeros_like(src)
                if shift <= M:
                    g[shift:] = src[: M + 1 - shift] * (q ** (l3 * m_idx[: M + 1 - shift]))[:, None]
                g *= (k * q ** (exp_k * l3)) ** l1
                if l0 >= 1:
                    conv = np.zeros_like(g)
                    for m in range(1, M + 1 - l0):
                        if np.any(g[m]):
                            conv[m + l0] = _gamma_ratio(m / k, (m + l0) / k) * g[m]
                    g = conv
                    eps_pow = t.delta - l0
                else:
                    eps_pow = t.delta
                # multiply by eps^eps_pow * c_{l,h}(eps)
                term = np.zeros_like(g)
                for i, c in enumerate(poly):
                    s = eps_pow + i
                    if c != 0 and s <= J:
                        term[:, s:] += c * g[:, : J + 1 - s]
                acc += fac * term
        coeffs.append(_series_mul(acc, inv))
    return TaylorData(k, tuple(coeffs[: N + 1]))


def root_radius(spec: ProblemSpec) -> float:
    return float(np.min(np.abs(roots_of_borel_symbol(spec.P, spec.k))))


def singular_radii(spec: ProblemSpec, N: int) -> np.ndarray:
    """Lower bounds for the radius of holomorphy of each ``omega_n``.

    ``omega_n`` for ``n < S`` is polynomial (radius ``inf``); afterwards each
    coefficient is singular at most at the roots of ``P(k u^k)`` and at the
    ``q^(-l3)``-contracted singularities of its sources.
    """
    rmin = root_radius(spec)
    S = spec.S
    sing = np.full(N + 1, np.inf)
    for n in range(0, N - S + 1):
        target = n + S
        best = np.inf
        for t in spec.terms:
            for h in t.coeffs:
                if h <= n:
                    best = min(best, rmin, sing[n - h + t.l2] / spec.q**t.l3)
        sing[target] = best
    return sing
