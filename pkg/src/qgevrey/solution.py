"""Sectorial solutions as truncated z-series of Laplace-transformed Borel coefficients.

``u_p(t, z, eps) = sum_n u_{p,n}(t, eps) z^n / n!`` with
``u_{p,n}(t, eps) = L_k(omega_{p,n}(., eps))(eps t)`` along a direction of
the Borel sector ``U_p``.  The ``"eps"`` variant lives on
``T x D_R x E_p`` (a covering in ``eps``), the ``"t"`` variant on
``T_p x D_R x E`` (a covering in ``t``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .borel import CoefficientFamily, SolverOptions, solve_family, verify_coeff_bounds
from .errors import DirectionError, DomainError, RangeError
from .geometry import AdmissibleConfig, Sector, choose_direction, robust_direction
from .laplace import DEFAULT_DELTA1, laplace_cut_radius, laplace_ray
from .numerics import RaySampling, ratio_tail
from .problem import ProblemSpec, eval_eps_poly

DEFAULT_N = 12


def spec_eps_independent(spec: ProblemSpec) -> bool:
    """True when every Borel coefficient is independent of ``eps``."""
    if not all(t.eps_independent() for t in spec.terms):
        return False
    return all(len(p) == 1 for d in spec.cauchy.polys.values() for p in d.values())


class BorelCache:
    """Reuses coefficient families across directions, orders and radii.

    A family solved to order ``N`` and radius ``R`` also serves any request
    with smaller order and radius in the same direction.
    """

    def __init__(self, spec: ProblemSpec, options: SolverOptions | None = None):
        self.spec = spec
        self.options = options or SolverOptions()
        self.eps_free = spec_eps_independent(spec)
        self._store: dict = {}
        self.solves = 0

    def family(self, eps: complex, direction: float, N: int, R_out: float, p: int = 0, config=None):
        key = (None if self.eps_free else complex(eps), round(float(direction), 12), p if config else None)
        fam = self._store.get(key)
        if fam is not None and fam.N >= N and fam.R_out >= R_out:
            return fam
        if fam is not None:
            N, R_out = max(N, fam.N), max(R_out, fam.R_out)
        fam = solve_family(
            self.spec, config, p, eps, N, R_out, direction=direction, options=self.options, with_discs=False
        )
        self.solves += 1
        self._store[key] = fam
        return fam


def _variant_domains(config: AdmissibleConfig, p: int, variant: str):
    """``(t_domain, eps_domain)`` sectors of the sectorial solution ``p``."""
    if variant == "eps":
        return config.companion, config.covering[p]
    return config.covering[p], config.companion


@dataclass
class SectorialSolution:
    """Truncated z-series of one sectorial solution with cached coefficients on a probe grid."""

    spec: ProblemSpec
    config: AdmissibleConfig
    variant: str
    p: int
    N: int
    direction: float
    margin: float
    cache: BorelCache
    t_grid: np.ndarray
    eps_grid: np.ndarray
    values: np.ndarray  # (N + 1, len(t_grid), len(eps_grid))
    z_radius: float
    delta1: float = DEFAULT_DELTA1
    notes: list = field(default_factory=list)

    @property
    def t_domain(self) -> Sector:
        return _variant_domains(self.config, self.p, self.variant)[0]

    @property
    def eps_domain(self) -> Sector:
        return _variant_domains(self.config, self.p, self.variant)[1]

    def check_domain(self, t, eps, z=0.0) -> None:
        if not bool(self.t_domain.contains(t)):
            raise DomainError(f"t = {t!r} outside the t-domain of solution {self.p}")
        if not bool(self.eps_domain.contains(eps)):
            raise DomainError(f"eps = {eps!r} outside the eps-domain of solution {self.p}")
        if not abs(z) < self.z_radius:
            raise DomainError(f"|z| = {abs(z):.6g} outside D_R with R = {self.z_radius:.6g}")

    def direction_for(self, T: complex) -> float:
        k = self.spec.k
        if math.cos(k * (self.direction - np.angle(T))) >= self.delta1:
            return self.direction
        gam, _ = choose_direction(self.config.borel_sectors[self.p], k, float(np.angle(T)))
        return gam

    def family(self, eps: complex, T_abs: float, direction: float | None = None, N: int | None = None, T_arg=None):
        gam = self.direction if direction is None else direction
        N = self.N if N is None else N
        phase = float(np.angle(eps)) + (0.0 if T_arg is None else T_arg)
        margin = max(math.cos(self.spec.k * (gam - phase)), self.delta1)
        R = laplace_cut_radius(self.spec.k, T_abs, margin)
        return self.cache.family(eps, gam, N, R, self.p, self.config)

    def laplace_coefficients(self, fam_fn, n_list, eps, T, direction, transform=None):
        """``L_k(g_n)(T)`` for each ``n``; ``g_n = transform(n, u, omega_n)`` or ``omega_n``."""
        T = np.atleast_1d(np.asarray(T, dtype=complex))
        out = []
        R_scale = 1.0
        for _ in range(6):
            fam = self.family(eps, float(np.abs(T).max()) * R_scale, direction, max(n_list), float(np.angle(T[0] / eps)))
            try:
                out = [self._laplace_one(fam, n, T, direction, transform) for n in n_list]
                return np.array(out)
            except RangeError:
                R_scale *= 1.6
        raise RangeError("could not reach the Laplace truncation radius")

    def _laplace_one(self, fam: CoefficientFamily, n, T, direction, transform):
        k = self.spec.k
        if transform is None:
            if not np.any(fam.rays[n].values):
                return np.zeros(T.shape, dtype=complex)
            return laplace_ray(fam.rays[n], k, direction, T, delta1=self.delta1)
        e = np.exp(1j * direction)
        ray = fam.rays[n]
        if not np.any(ray.values):
            return np.zeros(T.shape, dtype=complex)

        def g(u):
            return transform(n, u, fam.value(n, np.abs(u)))

        gs = RaySampling(direction, ray.radii, g(ray.radii * e))
        return laplace_ray(gs, k, direction, T, delta1=self.delta1)

    def coefficients(self, t, eps, N: int | None = None, transform=None, dilation: float = 1.0) -> np.ndarray:
        """``u_{p,n}(t, eps)`` for ``n = 0..N`` (optionally of a transformed Borel function at ``dilation * eps t``)."""
        N = self.N if N is None else N
        T = dilation * eps * complex(t)
        gam = self.direction_for(T)
        return self.laplace_coefficients(None, list(range(N + 1)), eps, np.array([T]), gam, transform)[:, 0]

    def remainder(self, coeffs: np.ndarray, z: complex) -> float:
        """Ratio-test estimate of ``sum_{n > N} |u_n| |z|^n / n!`` from the last three nonzero terms."""
        if abs(z) == 0:
            return 0.0
        return ratio_tail((n, abs(c) * abs(z) ** n / math.factorial(n)) for n, c in enumerate(coeffs))


def _robust_for(config: AdmissibleConfig, p: int, k: int, phases, clearance: float, roots) -> tuple:
    U = config.borel_sectors[p]
    if clearance > 0 and len(roots):
        # shrink U_p away from root directions near its boundary
        lo, hi = U.direction - U.half_opening, U.direction + U.half_opening
        for rt in roots:
            a = U.direction + math.remainder(float(np.angle(rt)) - U.direction, 2 * math.pi)
            if a >= U.direction:
                hi = min(hi, a - clearance)
            else:
                lo = max(lo, a + clearance)
        if hi - lo > math.radians(8):
            U = Sector((lo + hi) / 2, (hi - lo) / 2)
    return robust_direction(U, k, phases)


def assemble(
    spec: ProblemSpec,
    config: AdmissibleConfig,
    p: int,
    t_grid,
    eps_grid,
    N: int = DEFAULT_N,
    *,
    variant: str | None = None,
    cache: BorelCache | None = None,
    options: SolverOptions | None = None,
    direction: float | None = None,
    root_clearance: float = math.radians(15.0),
    z_radius: float | None = None,
) -> SectorialSolution:
    """Build ``u_p`` and cache ``u_{p,n}(t, eps)`` on the product grid ``t_grid x eps_grid``.

    One direction serves the whole grid: the one maximising the worst cosine
    margin over all grid phases (kept ``root_clearance`` away from root
    directions of ``P(k u^k)`` when the sector allows it).
    """
    variant = variant or config.variant
    if N < spec.S:
        raise DomainError(f"truncation N = {N} must be at least S = {spec.S}")
    cache = cache or BorelCache(spec, options)
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=complex))
    eps_grid = np.atleast_1d(np.asarray(eps_grid, dtype=complex))
    t_dom, e_dom = _variant_domains(config, p, variant)
    for t in t_grid:
        if not bool(t_dom.contains(t)):
            raise DomainError(f"grid point t = {t!r} outside the t-domain")
    for e in eps_grid:
        if not bool(e_dom.contains(e)):
            raise DomainError(f"grid point eps = {e!r} outside the eps-domain")
        if abs(e) > spec.eps0:
            raise DomainError(f"|eps| = {abs(e):.6g} exceeds eps0")
    phases = (np.angle(t_grid)[:, None] + np.angle(eps_grid)[None, :]).ravel()
    from .geometry import roots_of_borel_symbol

    if direction is None:
        try:
            direction, margin = _robust_for(config, p, spec.k, phases, root_clearance, roots_of_borel_symbol(spec.P, spec.k))
        except Exception as exc:
            raise DirectionError(f"no admissible direction in U_{p} for the probe grid: {exc}") from exc
    else:
        margin = float(np.min(np.cos(spec.k * (direction - phases))))
    if margin < DEFAULT_DELTA1:
        raise DirectionError(f"direction margin {margin:.3g} below delta1 on the probe grid")
    if z_radius is None:
        z_radius = _z_radius(spec, config, p, cache, direction, eps_grid[0], N)
    sol = SectorialSolution(
        spec, config, variant, p, N, float(direction), float(margin), cache, t_grid, eps_grid,
        np.zeros((N + 1, t_grid.size, eps_grid.size), dtype=complex), float(z_radius),
    )
    for j, e in enumerate(eps_grid):
        T = e * t_grid
        sol.values[:, :, j] = sol.laplace_coefficients(None, list(range(N + 1)), e, T, direction)
    return sol


def _z_radius(spec, config, p, cache, direction, eps, N) -> float:
    fam = cache.family(eps, direction, N, 1.0, p, config)
    rep = verify_coeff_bounds(fam, "ray-growth")
    R = rep.constants.get("R")
    return float(R) if R else 1.0


def evaluate(sol: SectorialSolution, t, z, eps) -> complex:
    """Truncated series ``sum_{n<=N} u_{p,n}(t, eps) z^n / n!``."""
    sol.check_domain(t, eps, z)
    c = _coeffs_at(sol, t, eps)
    return complex(sum(c[n] * z**n / math.factorial(n) for n in range(sol.N + 1)))


def series_remainder(sol: SectorialSolution, t, z, eps) -> float:
    sol.check_domain(t, eps, z)
    return sol.remainder(_coeffs_at(sol, t, eps), z)


def _coeffs_at(sol: SectorialSolution, t, eps) -> np.ndarray:
    it = np.nonzero(np.isclose(sol.t_grid, t, rtol=0, atol=1e-15))[0]
    ie = np.nonzero(np.isclose(sol.eps_grid, eps, rtol=0, atol=1e-15))[0]
    if it.size and ie.size:
        return sol.values[:, it[0], ie[0]]
    return sol.coefficients(t, eps)


# --------------------------------------------------------------------------
# PDE residual
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    relative: float
    absolute: float
    scale: float
    tail_estimate: complex
    explained_fraction: float
    fd_commutation: float

    def to_json(self):
        return {
            "relative": self.relative,
            "absolute": self.absolute,
            "scale": self.scale,
            "tail_estimate": abs(self.tail_estimate),
            "explained_fraction": self.explained_fraction,
            "fd_commutation": self.fd_commutation,
        }


def _operator_pieces(sol: SectorialSolution, t, z, eps, N: int):
    """LHS coefficients, per-term RHS sums and the index bookkeeping of the operator."""
    spec = sol.spec
    k, S, q = spec.k, spec.S, spec.q
    T = eps * complex(t)
    gam = sol.direction_for(T)
    Tmax = abs(T) * q**spec.max_l3
    # LHS: P(eps^k t^(k+1) d_t) d_z^S u -> L(P(k u^k) omega_{n+S})
    lhs_c = sol.laplace_coefficients(
        None, list(range(N + 1)), eps, np.array([T]), gam,
        transform=lambda n, u, w: spec.borel_symbol(u) * w,
    )[:, 0]
    lhs = sum(lhs_c[n + S] * z**n / math.factorial(n) for n in range(0, N - S + 1))
    rhs_terms = []
    for term in spec.terms:
        l0, l1, l2, l3 = term.ell
        qT = q**l3 * T
        if not bool(sol.t_domain.contains(q**l3 * complex(t))) and sol.variant == "eps":
            raise DomainError(f"q^{l3} t leaves the t-domain")
        vals = sol.laplace_coefficients(
            None, list(range(N + 1)), eps, np.array([qT]), gam,
            transform=lambda n, u, w, l1=l1: (k * u**k) ** l1 * w,
        )[:, 0]
        inner = sum(vals[m + l2] * z**m / math.factorial(m) for m in range(0, N - l2 + 1))
        cz = sum(term.coeff(h, eps) * z**h for h in term.coeffs)
        rhs_terms.append(eps**term.delta * cz * complex(t) ** l0 * inner)
    return lhs, rhs_terms, lhs_c


def pde_residual(sol: SectorialSolution, t, z, eps, N: int | None = None) -> float:
    """Relative residual of the q-difference-differential equation for the truncated series."""
    return pde_residual_report(sol, t, z, eps, N, with_tail=False).relative


def pde_residual_report(sol: SectorialSolution, t, z, eps, N: int | None = None, with_tail: bool = True) -> ResidualReport:
    """Residual with the z-series tail estimate and a finite-difference cross-check.

    Derivatives in ``t`` go through the Borel side (``eps^k t^(k+1) d_t``
    becomes multiplication by ``k u^k``); dilations are evaluated directly at
    ``q^l3 eps t``.  The tail estimate adds the LHS coefficients of orders
    ``N - S + 1 .. N + max h`` from an extended family: the RHS of a
    truncated series contains them, the LHS does not.
    """
    N = sol.N if N is None else N
    sol.check_domain(t, eps, z)
    spec = sol.spec
    lhs, rhs_terms, _ = _operator_pieces(sol, t, z, eps, N)
    res = lhs - sum(rhs_terms)
    scale = max([abs(lhs)] + [abs(r) for r in rhs_terms])
    rel = 0.0 if scale == 0 else abs(res) / scale
    tail = 0j
    explained = 1.0
    fd = 0.0
    if with_tail and scale > 0:
        hmax = max((h for tm in spec.terms for h in tm.coeffs), default=1)
        N_ext = N + spec.S + hmax
        T = eps * complex(t)
        gam = sol.direction_for(T)
        ext = sol.laplace_coefficients(
            None, list(range(N_ext + 1)), eps, np.array([T]), gam,
            transform=lambda n, u, w: spec.borel_symbol(u) * w,
        )[:, 0]
        tail = sum(ext[n + spec.S] * z**n / math.factorial(n) for n in range(N - spec.S + 1, N_ext - spec.S + 1))
        if abs(res) > 0:
            explained = max(0.0, 1.0 - abs(res + tail) / abs(res))
        fd = fd_commutation(sol, t, eps)
    return ResidualReport(float(rel), float(abs(res)), float(scale), complex(tail), float(explained), float(fd))


def fd_commutation(sol: SectorialSolution, t, eps, n: int | None = None) -> float:
    """Max relative gap between ``L(k u^k omega_n)`` and ``T^(k+1) d/dT L(omega_n)`` over ``n``.

    The derivative is a Richardson-extrapolated central difference along ``arg T``.
    """
    k = sol.spec.k
    T = eps * complex(t)
    gam = sol.direction_for(T)
    ns = [n] if n is not None else list(range(sol.N + 1))
    h = 1e-2 * abs(T)
    e = np.exp(1j * np.angle(T))
    pts = np.array([T + h * e, T - h * e, T + h / 2 * e, T - h / 2 * e])
    plain = sol.laplace_coefficients(None, ns, eps, pts, gam)
    borel = sol.laplace_coefficients(None, ns, eps, np.array([T]), gam, transform=lambda m, u, w: k * u**k * w)[:, 0]
    worst = 0.0
    for i, m in enumerate(ns):
        d1 = (plain[i, 0] - plain[i, 1]) / (2 * h * e)
        d2 = (plain[i, 2] - plain[i, 3]) / (h * e)
        rhs = T ** (k + 1) * (4 * d2 - d1) / 3
        scale = max(abs(rhs), abs(borel[i]))
        if scale > 0:
            worst = max(worst, float(abs(rhs - borel[i]) / scale))
    return worst


def cauchy_consistency(sol: SectorialSolution, t, eps) -> float:
    """Max relative gap between ``d_z^j u(t, 0, eps)`` and ``phi_j(t, eps)`` for ``j < S``."""
    from .problem import cauchy_to_physical

    c = _coeffs_at(sol, t, eps)
    worst = 0.0
    for j in range(sol.spec.S):
        phi = cauchy_to_physical(sol.spec.cauchy, sol.spec.k, eps, t, j)
        scale = max(abs(phi), abs(c[j]))
        if scale > 0:
            worst = max(worst, abs(c[j] - phi) / scale)
    return worst


def write_solution_csv(rows, path) -> None:
    """Rows of ``(p, t, z, eps, value, remainder)``.

    Columns: p, t_re, t_im, z_re, z_im, eps_re, eps_im, re, im, remainder.
    """
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "t_re", "t_im", "z_re", "z_im", "eps_re", "eps_im", "re", "im", "remainder"])
        for p, t, z, e, v, r in rows:
            t, z, e, v = complex(t), complex(z), complex(e), complex(v)
            nums = (t.real, t.imag, z.real, z.imag, e.real, e.imag, v.real, v.imag, r)
            w.writerow([int(p)] + [format(float(x), ".15g") for x in nums])
