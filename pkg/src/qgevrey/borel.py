"""Borel-plane coefficient recursion on rays and shrinking discs.

The auxiliary problem is solved coefficient by coefficient in ``z``:
``omega_{n+S}`` is an explicit expression in the dilated values and
convolution integrals of ``omega_m``, ``m < n + S``.  A ray sampling of
``omega_m`` must reach ``q^l3`` times as far as the coefficients that use
it, which is handled by an exact backward pass over the recursion graph
(the radius pyramid).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .envelope import fit_envelope
from .errors import DomainError, RangeError, ResourceError, SmallDivisorError
from .formal import root_radius
from .numerics import (
    DiscSampling,
    RaySampling,
    gamma_real,
    interpolate_ray,
    jacobi_rule,
)
from .problem import ProblemSpec, eval_eps_poly


@dataclass(frozen=True)
class SolverOptions:
    """Resolution and safety knobs of the ray recursion."""

    per_decade: int = 64
    r_min: float = 1e-4
    interp_order: int = 7
    quad_order: int = 16
    # absolute length cap of a quadrature panel along the convolution segment
    h_cap: float = 0.1
    small_divisor_floor: float = 1e-8
    radius_cap: float = 1e3
    disc_rays: int = 8
    disc_per_decade: int = 40
    R0_factor: float = 0.8

    def refined(self) -> "SolverOptions":
        """Twice the ray density and quadrature effort."""
        return replace(self, per_decade=2 * self.per_decade, quad_order=2 * self.quad_order, h_cap=self.h_cap / 2)


# --------------------------------------------------------------------------
# recursion terms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _Contribution:
    src: int
    factor: complex
    l0: int
    l1: int
    l3: int
    exp_k: float


def contributions(spec: ProblemSpec, n: int, eps: complex):
    """Source indices and scalar factors feeding ``omega_{n+S}``."""
    out = []
    for t in spec.terms:
        l0, l1, l2, l3 = t.ell
        eps_pow = t.delta if l0 == 0 else t.delta - l0
        exp_k = spec.k1 if (spec.literal_l0_exponent and l0 == 0) else spec.k
        for h in t.coeffs:
            if h > n:
                continue
            fac = eps**eps_pow * t.coeff(h, eps) * (math.factorial(n) / math.factorial(n - h))
            if fac != 0:
                out.append(_Contribution(n - h + l2, complex(fac), l0, l1, l3, exp_k))
    return out


def _symbol(spec: ProblemSpec, u, floor: float):
    Pu = spec.borel_symbol(u)
    bad = np.abs(Pu) < floor * spec.p_scale
    if np.any(bad):
        point = complex(np.asarray(u).ravel()[int(np.argmax(np.asarray(bad).ravel()))])
        raise SmallDivisorError(f"|P(k u^k)| below the small-divisor floor at u = {point!r}", point=point)
    return Pu


def recursion_values(
    spec: ProblemSpec,
    n: int,
    access: Callable[[int, np.ndarray], np.ndarray],
    u,
    eps: complex,
    options: SolverOptions | None = None,
) -> np.ndarray:
    """Vectorised ``omega_{n+S}(u)`` for points ``u`` on one ray.

    ``access(m, v)`` returns ``omega_m`` at the complex array ``v`` (same
    shape), all points lying on the segment from 0 to ``q^l3 u``.
    """
    opts = options or SolverOptions()
    k, q = spec.k, spec.q
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    out = np.zeros(u.shape, dtype=complex)
    for c in contributions(spec, n, eps):
        qd = q**c.l3
        if c.l0 == 0:
            out += c.factor * (k * (qd * u) ** c.exp_k) ** c.l1 * access(c.src, qd * u)
            continue
        alpha = c.l0 / k
        pref = c.factor * u**c.l0 / gamma_real(alpha) * (k * q ** (k * c.l3)) ** c.l1
        reach = np.abs(qd * u)
        panels = np.maximum(1, np.ceil(reach / opts.h_cap)).astype(int)
        for npan in np.unique(panels):
            sel = panels == npan
            tau, w, sigma = jacobi_rule(alpha, power=k, panels=int(npan), order=opts.quad_order)
            us = u[sel]
            vals = access(c.src, qd * us[:, None] * sigma[None, :])
            integrand = (us[:, None] ** k * tau[None, :]) ** c.l1 * vals / tau[None, :]
            out[sel] += pref[sel] * (integrand @ w)
    return out / _symbol(spec, u, opts.small_divisor_floor)


def recursion_step(spec: ProblemSpec, n: int, access, u: complex, eps: complex, options=None) -> complex:
    """``omega_{n+S}(u, eps)`` from an evaluator ``access(m, v)`` of the lower coefficients."""
    return complex(recursion_values(spec, n, access, np.array([u]), eps, options)[0])


# --------------------------------------------------------------------------
# radius pyramid and ray solver
# --------------------------------------------------------------------------


def radius_pyramid(spec: ProblemSpec, need: Sequence[float], grid: np.ndarray | None = None) -> np.ndarray:
    """Outer radii so that every dilated evaluation ``q^l3 u`` is covered.

    ``need[m]`` is the radius wanted for ``omega_m`` itself.  With ``grid``
    given, each requirement is rounded up to the first grid node before it
    is propagated to the sources.
    """
    req = np.array(need, dtype=float)
    N = req.size - 1
    for n_target in range(N, spec.S - 1, -1):
        r = req[n_target]
        if r <= 0:
            continue
        if grid is not None:
            i = min(int(np.searchsorted(grid, r * (1 - 1e-12))), grid.size - 1)
            r = max(r, grid[i])
        for c in contributions(spec, n_target - spec.S, 1.0 + 0j):
            req[c.src] = max(req[c.src], spec.q**c.l3 * r)
    return req


def anchored_grid(r_min: float, per_decade: int, top: float) -> np.ndarray:
    """Geometric radii ``r_min * 10^(j / per_decade)`` up to the first node >= ``top``."""
    m = max(int(math.ceil(math.log10(max(top, r_min) / r_min) * per_decade - 1e-9)), 1) + 1
    return r_min * 10.0 ** (np.arange(m + 1) / per_decade)


def _pyramid(spec, need, opts, per_decade):
    rough = radius_pyramid(spec, need)
    # rounding to grid nodes can only grow radii by a factor 10^(1/per_decade) per level
    slack = 10.0 ** ((len(need) + 1) / per_decade)
    top = max(rough.max() * slack, opts.r_min * 10)
    grid = anchored_grid(opts.r_min, per_decade, top)
    req = radius_pyramid(spec, need, grid)
    if req.max() > opts.radius_cap:
        raise ResourceError(
            f"radius pyramid needs outer radius {req.max():.6g} beyond cap {opts.radius_cap:.6g}"
        )
    return req, grid


def solve_rays(
    spec: ProblemSpec,
    eps: complex,
    direction: float,
    need: Sequence[float],
    options: SolverOptions | None = None,
    per_decade: int | None = None,
) -> list:
    """Ray samplings of ``omega_0 .. omega_N`` along ``direction``.

    ``need[m]`` is the outer radius wanted for ``omega_m``; entries set to 0
    are still sampled as far as the pyramid requires.
    """
    opts = options or SolverOptions()
    per_decade = per_decade or opts.per_decade
    N = len(need) - 1
    req, grid = _pyramid(spec, need, opts, per_decade)
    e = np.exp(1j * direction)
    rays: list = [None] * (N + 1)

    def count(m):
        r = max(req[m], opts.r_min * 10)
        return min(int(np.searchsorted(grid, r * (1 - 1e-12))) + 1, grid.size)

    for m in range(min(spec.S, N + 1)):
        radii = grid[: count(m)]
        rays[m] = RaySampling(direction, radii, spec.cauchy.evaluate(m, radii * e, eps))

    def access(m, v):
        r = np.abs(v)
        return interpolate_ray(rays[m], r, order=opts.interp_order)

    for n in range(0, N - spec.S + 1):
        radii = grid[: count(n + spec.S)]
        vals = recursion_values(spec, n, access, radii * e, eps, opts)
        rays[n + spec.S] = RaySampling(direction, radii, vals)
    return rays


# --------------------------------------------------------------------------
# coefficient families
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientFamily:
    """Ray and disc samplings of ``omega_{p,n}(., eps)`` for ``n = 0..N``."""

    spec: ProblemSpec
    p: int
    eps: complex
    direction: float
    rays: tuple
    discs: tuple
    disc_rays: tuple
    R0: float
    R_out: float
    options: SolverOptions = field(default_factory=SolverOptions)

    @property
    def N(self) -> int:
        return len(self.rays) - 1

    def disc_radius(self, n: int) -> float:
        return self.R0 / self.spec.q**n

    def value(self, n: int, r):
        """``omega_n`` at radii ``r`` along the family direction."""
        return interpolate_ray(self.rays[n], r, order=self.options.interp_order)

    def scaled(self, lam: complex) -> "CoefficientFamily":
        def sc(x):
            return replace(x, values=lam * x.values)

        return replace(
            self,
            rays=tuple(sc(r) for r in self.rays),
            discs=tuple(sc(d) for d in self.discs),
            disc_rays=tuple(tuple(sc(r) for r in rr) for rr in self.disc_rays),
        )

    def with_ray_values(self, n: int, values) -> "CoefficientFamily":
        rays = list(self.rays)
        rays[n] = replace(rays[n], values=np.asarray(values, dtype=complex))
        return replace(self, rays=tuple(rays))

    def ray_disc_consistency(self) -> float:
        """Max relative mismatch between ray and disc samplings along the family direction."""
        worst = 0.0
        for n in range(self.N + 1):
            dray = self.disc_rays[n][0] if self.disc_rays else None
            if dray is None:
                continue
            keep = dray.radii <= min(self.disc_radius(n), self.rays[n].r_max)
            if not np.any(keep):
                continue
            a = self.value(n, dray.radii[keep])
            b = dray.values[keep]
            scale = max(np.max(np.abs(b)), 1e-300)
            worst = max(worst, float(np.max(np.abs(a - b)) / scale))
        return worst


def default_R0(spec: ProblemSpec, options: SolverOptions | None = None) -> float:
    opts = options or SolverOptions()
    return opts.R0_factor * root_radius(spec)


def solve_family(
    spec: ProblemSpec,
    config,
    p: int,
    eps: complex,
    N: int,
    R_out: float,
    *,
    direction: float | None = None,
    options: SolverOptions | None = None,
    with_discs: bool = True,
) -> CoefficientFamily:
    """Solve the Borel recursion for sector ``p`` up to order ``N``.

    ``direction`` defaults to the bisector of the Borel sector ``U_p``; it
    must lie inside ``U_p``.  Ray samplings reach at least ``R_out``; disc
    samplings use ``R_n = R0 / q^n`` with ``R0`` below the root radius.
    """
    opts = options or SolverOptions()
    if N < spec.S:
        raise DomainError(f"truncation N = {N} must be at least S = {spec.S}")
    if abs(eps) > spec.eps0 * (1 + 1e-12):
        raise DomainError(f"|eps| = {abs(eps):.6g} exceeds eps0 = {spec.eps0:.6g}")
    U = config.borel_sectors[p] if config is not None else None
    if direction is None:
        direction = U.direction if U is not None else 0.0
    if U is not None and not U.contains_direction(direction):
        raise DomainError(f"direction {direction:.6g} is not inside U_{p}")
    rays = solve_rays(spec, eps, direction, [R_out] * (N + 1), opts)
    R0 = default_R0(spec, opts)
    discs, disc_rays = (), ()
    if with_discs:
        need = [R0 / spec.q**n for n in range(N + 1)]
        per_dir = []
        for j in range(opts.disc_rays):
            d = direction + 2 * math.pi * j / opts.disc_rays
            per_dir.append(solve_rays(spec, eps, d, need, opts, per_decade=opts.disc_per_decade))
        disc_rays = tuple(tuple(per_dir[j][n] for j in range(opts.disc_rays)) for n in range(N + 1))
        discs = tuple(DiscSampling.from_rays(need[n], disc_rays[n]) for n in range(N + 1))
    return CoefficientFamily(spec, p, complex(eps), float(direction), tuple(rays), discs, disc_rays, R0, R_out, opts)


def write_family_csv(families, path) -> None:
    """Columns: p, n, grid, radius, angle_deg, re, im."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "n", "grid", "radius", "angle_deg", "re", "im"])
        for fam in families:
            for n, ray in enumerate(fam.rays):
                ang = math.degrees(ray.direction)
                for r, v in zip(ray.radii, ray.values):
                    w.writerow([fam.p, n, "ray", _fmt(r), _fmt(ang), _fmt(v.real), _fmt(v.imag)])
            for n, disc in enumerate(fam.discs):
                for z, v in zip(disc.nodes, disc.values):
                    w.writerow(
                        [fam.p, n, "disc", _fmt(abs(z)), _fmt(math.degrees(np.angle(z))), _fmt(v.real), _fmt(v.imag)]
                    )


def _fmt(x: float) -> str:
    return format(float(x), ".15g")


# --------------------------------------------------------------------------
# bound fits
# --------------------------------------------------------------------------

LOG_CONST_CAP = 20.0
RATE_CAP = 5.0
ALPHA_CAP = 4.0


@dataclass(frozen=True)
class BoundFitReport:
    bound: str
    constants: dict
    max_violation: float
    passed: bool
    n_samples: int
    zero_family: bool = False
    notes: tuple = ()

    def to_json(self):
        return {
            "bound": self.bound,
            "constants": self.constants,
            "max_violation": self.max_violation,
            "passed": self.passed,
            "n_samples": self.n_samples,
            "zero_family": self.zero_family,
            "notes": list(self.notes),
        }


def _log_samples(rows):
    # rows: (n, |u|, |omega|) with omega != 0
    arr = np.array(rows, dtype=float) if rows else np.zeros((0, 3))
    return arr


def _ray_rows(family, r_max=None):
    rows = []
    for n, ray in enumerate(family.rays):
        keep = ray.radii if r_max is None else ray.radii[ray.radii <= r_max]
        vals = np.abs(ray.values[: keep.size])
        for r, v in zip(keep, vals):
            rows.append((n, r, v))
    return rows


def verify_coeff_bounds(family: CoefficientFamily, which: str, Delta: float | None = None, k1=None) -> BoundFitReport:
    """Fit the free constants of a coefficient bound and report violations.

    ``which`` is one of ``"ray-growth"`` (factorial-over-``(2R)^n`` growth with
    the ``exp(k1 log^2)`` envelope along the ray), ``"disc"`` (the
    ``n!/q^(n^2 Delta)`` bound on ``D_{R_n}``) or ``"annulus"`` (the
    ``n!/q^(h^2 Delta)`` bound on the annuli ``R0/q^(h+1) <= |u| <= R0/q^h``).
    Constants are minimal in the LP sense; ``passed`` means the LP is
    feasible inside the caps.
    """
    spec = family.spec
    Delta = spec.Delta if Delta is None else Delta
    k1 = spec.k1 if k1 is None else k1
    logq = math.log(spec.q)
    if which == "ray-growth":
        rows = _ray_rows(family)
        name = "ray-growth"
    elif which == "disc":
        rows = []
        for n, disc in enumerate(family.discs):
            for z, v in zip(disc.nodes, disc.values):
                rows.append((n, abs(z), abs(v)))
        name = "disc"
    elif which == "annulus":
        rows = []
        for n, ray in enumerate(family.rays):
            for r, v in zip(ray.radii, np.abs(ray.values)):
                for h in range(n):
                    lo, hi = family.R0 / spec.q ** (h + 1), family.R0 / spec.q**h
                    if lo <= r <= hi:
                        rows.append((n, r, v, h))
        name = "annulus"
    else:
        raise DomainError(f"unknown bound {which!r}")
    if not rows:
        raise DomainError("empty sample set for bound fit")
    arr = np.array(rows, dtype=float)
    nz = arr[:, 2] > 0
    if not np.any(nz):
        return BoundFitReport(name, {"log_C": None, "C": 0.0}, 0.0, True, int(arr.shape[0]), True)
    arr = arr[nz]
    n, r, v = arr[:, 0], arr[:, 1], arr[:, 2]
    lf = np.array([math.lgamma(x + 1) for x in n])
    base = np.log(v) - lf - np.log(r)
    notes = []
    if name == "ray-growth":
        # alpha = 0 first: with alpha free, the LP trades alpha against C without bound
        best = None
        for alpha_hi in (0.0, ALPHA_CAP):
            for u0 in (1.5, math.e, 5.0, 10.0):
                L = np.log(r + u0)
                y = base - k1 * L**2
                A = np.column_stack([np.ones_like(n), n, L])
                cost = [1.0, float(np.mean(n)), 0.0]
                fit = fit_envelope(A, y, cost, [(-LOG_CONST_CAP, LOG_CONST_CAP), (-RATE_CAP, RATE_CAP), (0.0, alpha_hi)])
                score = float(np.dot(cost, fit.x)) if fit.feasible else np.inf
                if best is None or score < best[0]:
                    best = (score, u0, fit)
            if best[2].feasible:
                break
        _, u0, fit = best
        logC, b, alpha = fit.x
        consts = {
            "log_C3": logC,
            "C3": math.exp(logC) if fit.feasible else None,
            "log_inv_2R": b,
            "R": 0.5 * math.exp(-b) if fit.feasible else None,
            "alpha": alpha,
            "u0": u0,
            "k1": k1,
        }
    elif name == "disc":
        y = base + n**2 * Delta * logq
        A = np.column_stack([np.ones_like(n), n])
        fit = fit_envelope(A, y, [1.0, float(np.mean(n))], [(-LOG_CONST_CAP, LOG_CONST_CAP), (-RATE_CAP, RATE_CAP)])
        consts = {"log_C1": fit.x[0], "log_C2": fit.x[1], "C1": _exp(fit), "C2": _exp(fit, 1)}
    else:
        h = arr[:, 3]
        y = base + h**2 * Delta * logq
        A = np.column_stack([np.ones_like(n), n])
        fit = fit_envelope(A, y, [1.0, float(np.mean(n))], [(-LOG_CONST_CAP, LOG_CONST_CAP), (-RATE_CAP, RATE_CAP)])
        consts = {"log_C5": fit.x[0], "log_C6": fit.x[1], "C5": _exp(fit), "C6": _exp(fit, 1)}
    if not fit.feasible:
        notes.append(f"no envelope within caps: {fit.message}")
    viol = fit.max_violation if fit.feasible else float("inf")
    return BoundFitReport(name, consts, viol, bool(fit.feasible and viol <= 1e-9), int(arr.shape[0]), False, tuple(notes))


def _exp(fit, i=0):
    return math.exp(fit.x[i]) if fit.feasible else None


def global_envelope(family: CoefficientFamily, report: BoundFitReport, z_radius: float, r):
    """Right-hand side ``2 C3 |u| exp(k1 log^2(|u|+u0) + alpha log(|u|+u0))`` of the full-series bound.

    Valid for ``|z| <= z_radius`` when ``z_radius`` does not exceed the fitted ``R``.
    """
    c = report.constants
    if c.get("R") is None or z_radius > c["R"] * (1 + 1e-12):
        raise DomainError("z radius exceeds the fitted convergence radius")
    L = np.log(np.asarray(r) + c["u0"])
    return 2 * math.exp(c["log_C3"]) * np.asarray(r) * np.exp(c["k1"] * L**2 + c["alpha"] * L)


def check_full_series_bound(family: CoefficientFamily, report: BoundFitReport, z_radius: float | None = None):
    """Check ``|sum_n omega_n(u) z^n/n!| <= 2 C3 |u| exp(...)`` on the ray samples.

    The series is bounded termwise by ``sum_n |omega_n| |z|^n/n!``, maximal at
    ``|z| = z_radius`` (defaults to the fitted ``R``).  Returns ``(passed, worst_ratio)``.
    """
    R = report.constants.get("R")
    if R is None:
        return False, float("inf")
    z = R if z_radius is None else z_radius
    radii = family.rays[-1].radii
    total = np.zeros(radii.size)
    for n, ray in enumerate(family.rays):
        m = min(ray.radii.size, radii.size)
        total[:m] += np.abs(ray.values[:m]) * z**n / math.factorial(n)
    bound = global_envelope(family, report, z, radii)
    ratio = float(np.max(total / bound))
    return ratio <= 1.0 + 1e-9, ratio
