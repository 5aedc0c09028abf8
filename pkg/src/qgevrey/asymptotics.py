"""Series norms, cocycles, flatness and bound fits, and growth classification.

A function ``h(t, z) = sum_n h_n(t) z^n / n!`` is measured by
``sum_n sup |h_n| R1^n / n!`` where the sup runs over the base sector
(``"sup"`` variant) or over the base sector cut to ``|x| <= r q^-n``
(``"q-relative"`` variant, ``r`` the base radius).  Sups are taken on
sample grids; both variants share one grid so the comparison
``q-relative <= sup`` holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .envelope import fit_envelope
from .errors import DomainError, InsufficientDataError
from .geometry import Sector
from .numerics import ratio_tail

VARIANTS = ("q-relative", "sup")

# caps for the log-linear envelope fits
LOG_CONST_CAP = 30.0
LOG_RATE_CAP = 10.0

R2_THRESHOLD = 0.99
VERDICT_MARGIN = 10.0
CONVERGENT_S = 0.15
LOGQ_MIN = 0.02
# log-magnitude RMS below which residual differences are ignored
RESIDUAL_FLOOR = 1e-3
# log-units below the Gevrey fit at which a magnitude counts as cancelled
CANCEL_DEPTH = 5.0


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """Which series norm, on which base sector.

    ``base`` is the sector of the variable that is *not* probed: the
    ``t``-sector in the ``eps`` variant and the ``eps``-sector in the ``t``
    variant.
    """

    variant: str
    base: Sector
    q: float
    R1: float
    N_norm: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"norm variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.R1 > 0:
            raise DomainError("R1 must be positive")
        if not self.q > 1:
            raise DomainError("q must exceed 1")
        if self.base.radius is None:
            raise DomainError("the base sector of a norm must be bounded")
        if self.N_norm < 0:
            raise DomainError("N_norm must be non-negative")

    def radius(self, n: int) -> float:
        """Radius of the set the ``n``-th sup runs over."""
        if self.variant == "sup":
            return self.base.radius
        return min(self.base.radius, self.q ** (-n))

    def weights(self) -> np.ndarray:
        n = np.arange(self.N_norm + 1)
        return np.exp(n * math.log(self.R1) - gammaln(n + 1))

    def to_json(self):
        return {
            "variant": self.variant,
            "base": self.base.to_json(),
            "q": self.q,
            "R1": self.R1,
            "N_norm": self.N_norm,
        }


def norm_grid(norm: NormSpec, n_radii: int = 8, n_angles: int = 9, inset: float = 0.0) -> np.ndarray:
    """Sample points of the closed base sector shared by both norm variants.

    Radii are a uniform grid joined with the q-relative cut radii
    ``q^-n <= r`` (``n <= N_norm``), so each q-relative sup runs over a subset of
    the points of the sup variant.  ``inset`` (radians) pulls the edge rays
    inside the sector.
    """
    sec = norm.base
    r = sec.radius
    cuts = float(norm.q) ** -np.arange(norm.N_norm + 1.0)
    radii = np.unique(np.concatenate([r * np.linspace(0, 1, n_radii + 1)[1:], cuts[cuts <= r]]))
    half = sec.half_opening - inset
    if half <= 0:
        raise DomainError("inset swallows the base sector")
    angs = sec.direction + np.linspace(-half, half, n_angles)
    return (radii[:, None] * np.exp(1j * angs)[None, :]).ravel()


@dataclass(frozen=True)
class NormValue:
    value: float
    tail: float
    terms: np.ndarray

    def to_json(self):
        return {"value": self.value, "tail": self.tail, "terms": [float(x) for x in self.terms]}


def term_sups(values, norm: NormSpec, grid: np.ndarray) -> np.ndarray:
    """``sup |h_n|`` over the admissible grid points, one per ``n``.

    ``values`` has shape ``(N_norm + 1, len(grid), ...)``; trailing axes (for
    instance several probes) are kept.
    """
    values = np.asarray(values)
    if values.shape[0] != norm.N_norm + 1 or values.shape[1] != grid.size:
        raise DomainError(f"values of shape {values.shape} do not match N_norm = {norm.N_norm} and the grid")
    absg = np.abs(grid)
    out = np.zeros((norm.N_norm + 1,) + values.shape[2:])
    for n in range(norm.N_norm + 1):
        sel = absg <= norm.radius(n) * (1 + 1e-12)
        if not np.any(sel):
            raise DomainError(f"no sample points in the base sector cut to radius {norm.radius(n):.6g} (n = {n})")
        out[n] = np.abs(values[n][sel]).max(axis=0)
    return out


def series_norm(h, norm: NormSpec, grid: np.ndarray | None = None) -> NormValue:
    """Truncated series norm of ``h`` plus a ratio-test estimate of the dropped tail.

    ``h`` is a callable ``h(n, x)`` returning ``h_n`` at the sample points, or
    an array of shape ``(N_norm + 1, len(grid))``.
    """
    grid = norm_grid(norm) if grid is None else np.asarray(grid, dtype=complex)
    if callable(h):
        vals = np.array([np.broadcast_to(np.asarray(h(n, grid), dtype=complex), grid.shape) for n in range(norm.N_norm + 1)])
    else:
        vals = np.asarray(h)
    terms = term_sups(vals, norm, grid) * norm.weights()
    tail = ratio_tail(enumerate(terms))
    return NormValue(float(terms.sum()), float(tail), terms)


# --------------------------------------------------------------------------
# flatness and mixed-bound fits
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FlatnessFit:
    model: str
    constants: dict
    r2: float | None
    x_range: tuple
    passed: bool
    flat: bool = False
    notes: list = field(default_factory=list)
    slacks: dict | None = None

    def to_json(self):
        return {
            "model": self.model,
            "constants": self.constants,
            "r2": self.r2,
            "x_range": list(self.x_range),
            "passed": self.passed,
            "flat": self.flat,
            "notes": list(self.notes),
            "slacks": self.slacks,
        }

    def predict(self, x, N=None):
        c = self.constants
        x = np.asarray(x, dtype=float)
        if self.model == "exp-flat":
            return c["A"] * np.exp(-c["B"] / x ** c["k"])
        return np.exp(c["log_A"] + N * c["log_B"] + gammaln(N / c["k"]) + 0.5 * N**2 * math.log(c["q"]) + N * np.log(x))


def _checked_xy(x, y, min_points: int = 4):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DomainError("x and y must have the same length")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DomainError("flatness fits need positive finite samples")
    if np.any(x <= 0):
        raise DomainError("sample abscissae must be positive")
    if np.unique(x).size < min_points:
        raise InsufficientDataError(f"need at least {min_points} distinct sample points, got {np.unique(x).size}")
    return x, y


def _flat_lsq(x, ly, k):
    A = np.column_stack([np.ones_like(x), x ** (-k)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    ss_res = float(res @ res)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    return coef, ss_res, ss_tot


def _r2(ss_res, ss_tot, scale):
    if ss_tot <= 1e-24 * max(scale, 1.0):
        return 1.0 if ss_res <= 1e-20 * max(scale, 1.0) else 0.0
    return 1.0 - ss_res / ss_tot


def fit_exponential_flatness(
    x, y, k: float, *, free_k: bool = False, r2_threshold: float = R2_THRESHOLD, k_bounds=(0.1, 6.0)
) -> FlatnessFit:
    """Least-squares fit of ``log y = log A - B / x^k``.

    With ``free_k`` the order is also fitted by a bounded 1-D search on the
    residual; the fixed-``k`` fit is kept in ``constants["B_fixed_k"]``.
    ``B`` is recorded only when ``R^2 >= r2_threshold``.
    """
    x, y = _checked_xy(x, y)
    ly = np.log(y)
    scale = float(ly @ ly)
    coef, ss_res, ss_tot = _flat_lsq(x, ly, k)
    r2_fixed = _r2(ss_res, ss_tot, scale)
    consts = {"k": float(k), "A": float(math.exp(coef[0])), "B": float(-coef[1]), "r2_fixed_k": r2_fixed}
    r2 = r2_fixed
    notes = []
    if free_k:
        # log-x scaling keeps the search well conditioned for small x
        res = minimize_scalar(lambda kk: _flat_lsq(x, ly, kk)[1], bounds=k_bounds, method="bounded", options={"xatol": 1e-6})
        kf = float(res.x)
        cf, sf, tf = _flat_lsq(x, ly, kf)
        consts["B_fixed_k"] = consts["B"]
        consts.update({"k": kf, "A": float(math.exp(cf[0])), "B": float(-cf[1]), "k_fixed": float(k)})
        r2 = _r2(sf, tf, scale)
    B = consts["B"]
    good = r2 >= r2_threshold
    if not good:
        notes.append(f"R^2 = {r2:.4g} below threshold {r2_threshold}; B not recorded")
        consts["B"] = None
    flat = bool(good and B > 1e-9 * max(1.0, float(np.abs(ly).max())) * float(np.max(x ** consts["k"])))
    if good and not flat:
        notes.append("B is not positive: samples are not exponentially flat")
    return FlatnessFit("exp-flat", consts, float(r2), (float(x.min()), float(x.max())), bool(good and flat), flat, notes)


def _slack_summary(s):
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return None
    return {"min": float(s.min()), "median": float(np.median(s)), "max": float(s.max())}


def check_mixed_bound(N, x, y, k: float, q: float) -> FlatnessFit:
    """Smallest ``(log A, log B)`` with ``y <= A B^N Gamma(N/k) q^(N^2/2) x^N`` on all samples.

    The LP minimises ``log A + mean(N) log B``, the log-envelope at the mean
    order; on data lying exactly on an envelope this recovers its constants.
    Samples with ``y == 0`` are always satisfied; all-zero data passes with
    ``zero`` flagged.
    """
    N = np.asarray(N, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if not (N.shape == x.shape == y.shape):
        raise DomainError("N, x and y must have the same length")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise DomainError("mixed-bound samples must be finite and non-negative")
    if np.any(N < 1) or np.any(x <= 0):
        raise DomainError("mixed bounds need orders N >= 1 and positive x")
    if np.unique(N).size < 3 or np.unique(x).size < 4:
        raise InsufficientDataError("mixed-bound fits need at least 3 orders and 4 sample points")
    rng = (float(x.min()), float(x.max()))
    pos = y > 0
    base = {"k": float(k), "q": float(q)}
    if not np.any(pos):
        return FlatnessFit("mixed", {**base, "log_A": None, "log_B": None, "zero": True}, None, rng, True, notes=["all samples vanish"])
    Np, xp = N[pos], x[pos]
    rhs = np.log(y[pos]) - gammaln(Np / k) - 0.5 * Np**2 * math.log(q) - Np * np.log(xp)
    A = np.column_stack([np.ones_like(Np), Np])
    fit = fit_envelope(A, rhs, [1.0, float(Np.mean())], [(-LOG_CONST_CAP * 10, LOG_CONST_CAP), (-LOG_RATE_CAP, LOG_RATE_CAP)])
    notes = [] if fit.feasible else [f"no envelope within caps: {fit.message}"]
    consts = {**base, "log_A": float(fit.x[0]), "log_B": float(fit.x[1]), "zero": False}
    if fit.feasible:
        consts.update({"A": math.exp(fit.x[0]), "B": math.exp(fit.x[1])})
    return FlatnessFit("mixed", consts, None, rng, bool(fit.feasible), notes=notes, slacks=_slack_summary(fit.slacks))


# --------------------------------------------------------------------------
# growth classification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthClassification:
    verdict: str
    s: float
    s_err: float
    log_q: float | None
    q_hat: float | None
    q_err: float | None
    residuals: dict
    n_points: int
    notes: list = field(default_factory=list)

    def to_json(self):
        return {
            "verdict": self.verdict,
            "s": self.s,
            "s_err": self.s_err,
            "log_q": self.log_q,
            "q_hat": self.q_hat,
            "q_err": self.q_err,
            "residuals": self.residuals,
            "n_points": self.n_points,
            "notes": list(self.notes),
        }


def _design(n, mixed: bool, logq_fixed: float | None):
    cols = [np.ones_like(n), n, np.log(n), 1.0 / n, gammaln(n + 1)]
    if mixed and logq_fixed is None:
        cols.append(0.5 * n**2)
    return np.column_stack(cols)


def _growth_fit(n, la, mixed: bool, logq_fixed: float | None):
    A = _design(n, mixed, logq_fixed)
    rhs = la - (0.5 * n**2 * logq_fixed if (mixed and logq_fixed is not None) else 0.0)
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    r = rhs - A @ coef
    s = float(coef[4])
    lq = (float(coef[5]) if logq_fixed is None else float(logq_fixed)) if mixed else None
    return s, lq, float(r @ r)


def classify_growth(
    magnitudes: Sequence[float],
    q: float | None = None,
    k_hint: float | None = None,
    *,
    fix_q: bool = False,
    margin: float = VERDICT_MARGIN,
    n_boot: int = 200,
    seed: int = 0,
    cancel_depth: float | None = CANCEL_DEPTH,
) -> GrowthClassification:
    """Gevrey versus mixed growth of ``|a_n|`` (index ``n`` starts at 0; zeros skipped).

    Both models carry ``c0 + c1 n + c2 log n + c3 / n`` nuisance terms (Stirling
    corrections) plus
    ``s log n!``; the mixed model adds ``(n^2/2) log q_hat`` (``q_hat = q``
    when ``fix_q``).  The models are nested, so "mixed" needs a residual
    ratio of at least ``margin`` and a growth ``log q_hat >= LOGQ_MIN``.
    Error bars come from refits on random 80% subsets of the indices.

    Magnitudes more than ``cancel_depth`` log-units below the Gevrey fit are
    treated as cancelled (numerical zeros) and dropped; the fit is repeated
    until the kept set is stable.  ``None`` disables the filter.
    """
    a = np.abs(np.asarray(magnitudes, dtype=float))
    n = np.arange(a.size, dtype=float)
    use = (a > 0) & np.isfinite(a) & (n >= 1)
    if use.sum() < 8:
        raise InsufficientDataError(f"classification needs at least 8 nonzero magnitudes with n >= 1, got {int(use.sum())}")
    if fix_q and (q is None or q <= 1):
        raise DomainError("fix_q needs q > 1")
    n, la = n[use], np.log(a[use])
    notes = []
    if cancel_depth is not None:
        keep = np.ones(n.size, dtype=bool)
        for _ in range(n.size):
            c, *_ = np.linalg.lstsq(_design(n[keep], False, None), la[keep], rcond=None)
            new = la - _design(n, False, None) @ c > -cancel_depth
            if new.sum() < 8 or (new == keep).all():
                break
            keep = new
        if not keep.all():
            notes.append(f"{int((~keep).sum())} magnitudes treated as cancelled")
            n, la = n[keep], la[keep]
    lq_fixed = math.log(q) if fix_q else None
    sG, _, ssG = _growth_fit(n, la, False, None)
    sM, lq, ssM = _growth_fit(n, la, True, lq_fixed)
    floor = n.size * RESIDUAL_FLOOR**2
    ratio = (ssG + floor) / (ssM + floor)
    if k_hint:
        notes.append(f"expected Gevrey order s = {1.0 / k_hint:.6g}")
    if ratio >= margin and lq is not None and lq >= LOGQ_MIN:
        verdict, s = "mixed", sM
    elif ratio >= margin and lq is not None and lq <= -LOGQ_MIN:
        verdict, s = "ambiguous", sG
        notes.append("the quadratic term improves the fit but decreases growth")
    else:
        s = sG
        verdict = "convergent" if abs(sG) < CONVERGENT_S else "Gevrey"
    rng = np.random.default_rng(seed)
    m = max(8, int(round(0.8 * n.size)))
    s_b, q_b = [], []
    for _ in range(n_boot):
        idx = np.sort(rng.choice(n.size, size=m, replace=False))
        if verdict == "mixed":
            sb, lqb, _ = _growth_fit(n[idx], la[idx], True, lq_fixed)
            q_b.append(lqb)
        else:
            sb, _, _ = _growth_fit(n[idx], la[idx], False, None)
        s_b.append(sb)
    s_err = float(np.std(s_b)) if s_b else 0.0
    mixed = verdict == "mixed"
    q_err = float(np.std(np.exp(q_b))) if q_b else None
    return GrowthClassification(
        verdict,
        float(s),
        s_err,
        lq if mixed else None,
        math.exp(lq) if mixed else None,
        q_err if mixed else None,
        {"gevrey": ssG, "mixed": ssM, "ratio": float(ratio)},
        int(n.size),
        notes,
    )


MAX_PERIOD = 6
# residual gain that makes residue-class offsets worth their extra columns
PERIOD_MARGIN = 3.0


def detect_period(magnitudes: Sequence[float], n_min: int = 1, max_period: int = MAX_PERIOD, margin: float = PERIOD_MARGIN) -> int:
    """Smallest period ``d`` of residue-class offsets that explains ``log |a_n|``.

    The Gevrey model is refitted with one free offset per class ``n mod d``;
    ``d > 1`` is accepted when it cuts the residual by ``margin`` against
    ``d = 1`` and no smaller period comes within a factor 2 of it.
    """
    a = np.abs(np.asarray(magnitudes, dtype=float))
    n = np.arange(a.size, dtype=float)
    use = (a > 0) & np.isfinite(a) & (n >= max(n_min, 1))
    n, la = n[use], np.log(a[use])
    floor = n.size * RESIDUAL_FLOOR**2
    res = {}
    for d in range(1, max_period + 1):
        A = _design(n, False, None)
        if d > 1:
            A = np.column_stack([A] + [(n % d == r).astype(float) for r in range(1, d)])
        if n.size <= A.shape[1] + 2:
            break
        c, *_ = np.linalg.lstsq(A, la, rcond=None)
        r = la - A @ c
        res[d] = float(r @ r) + floor
    if not res:
        return 1
    best = min(res.values())
    if res[1] < margin * best:
        return 1
    return min(d for d, v in res.items() if v <= 2 * best)


def classify_by_residue(magnitudes: Sequence[float], q: float | None = None, k_hint: float | None = None, *,
                        period: int | None = None, n_min: int = 1, **kw) -> dict:
    """Classify each residue class ``n mod period`` of a lacunary sequence separately.

    Indices below ``n_min`` are dropped (pre-asymptotic).  The overall verdict
    is that of the dominant class, the one holding the largest of the last
    ``period`` magnitudes.  Classes with too few points are reported as
    insufficient.
    """
    a = np.abs(np.asarray(magnitudes, dtype=float))
    d = detect_period(a, n_min) if period is None else int(period)
    n = np.arange(a.size)
    classes = []
    for r in range(d):
        sub = np.where((n % d == r) & (n >= n_min), a, 0.0)
        try:
            g = classify_growth(sub, q, k_hint, cancel_depth=None, **kw)
            classes.append({"residue": r, "classification": g})
        except InsufficientDataError as exc:
            classes.append({"residue": r, "classification": None, "error": str(exc)})
    tail = a[-d:]
    dom = int((a.size - d + int(np.argmax(tail))) % d)
    g = classes[dom]["classification"]
    verdicts = {c["classification"].verdict for c in classes if c["classification"] is not None}
    return {
        "period": d,
        "n_min": int(n_min),
        "dominant_residue": dom,
        "verdict": g.verdict if g is not None else "insufficient-data",
        "s": g.s if g is not None else None,
        "consistent": len(verdicts) == 1,
        "classes": classes,
    }


# --------------------------------------------------------------------------
# cocycles
# --------------------------------------------------------------------------

# Theta_n = u_{b,n} - u_{a,n} is assembled from the tails of both Laplace
# integrals beyond rho_n plus the arc |u| = rho_n joining the two directions,
# rho_n a fixed fraction of the radius up to which omega_n is holomorphic.
# Each piece is of size exp(-rho_n cos / |T|^k), close to Theta_n itself, so
# the exponentially small difference is not lost to cancellation.

RHO_FRACTION = 0.9
ARC_ORDER = 16


def overlap_phases(covering, p: int, n: int = 9) -> np.ndarray:
    lo, hi = covering.overlap_interval(p)
    return np.linspace(lo, hi, n)


class CocycleEvaluator:
    """``Theta_n(x, y) = u_{b,n} - u_{a,n}`` for probes ``x`` in the overlap of sectors ``a``, ``b``.

    ``y`` runs over base points (``t`` in the ``eps`` variant, ``eps`` in the
    ``t`` variant); the Laplace variable is ``T = x y``.
    """

    def __init__(
        self,
        spec,
        config,
        a: int,
        b: int,
        N: int,
        *,
        variant: str | None = None,
        cache=None,
        base_phases=None,
        root_clearance: float = math.radians(15.0),
        rho_fraction: float = RHO_FRACTION,
        delta1: float = 1e-3,
    ):
        from .formal import singular_radii, taylor_coefficients
        from .geometry import roots_of_borel_symbol
        from .solution import BorelCache, _robust_for

        n_sec = len(config.covering)
        a, b = a % n_sec, b % n_sec
        if b not in (a, (a + 1) % n_sec):
            raise DomainError(f"sectors {a} and {b} are not neighbours")
        self.spec, self.config, self.a, self.b, self.N = spec, config, a, b, N
        self.variant = variant or config.variant
        self.cache = cache or BorelCache(spec)
        self.delta1 = delta1
        self.trivial = a == b
        self.notes = []
        if self.trivial:
            return
        k = spec.k
        comp = config.companion
        if base_phases is None:
            base_phases = comp.direction + np.linspace(-comp.half_opening, comp.half_opening, 9)
        phases = (overlap_phases(config.covering, a)[:, None] + np.asarray(base_phases)[None, :]).ravel()
        self.phases = phases
        roots = roots_of_borel_symbol(spec.P, k)
        self.gamma_a, self.margin_a = _robust_for(config, a, k, phases, root_clearance, roots)
        self.gamma_b, self.margin_b = _robust_for(config, b, k, phases, root_clearance, roots)
        self.gamma_b = self.gamma_a + math.remainder(self.gamma_b - self.gamma_a, 2 * math.pi)
        th = np.linspace(self.gamma_a, self.gamma_b, 33)
        self.arc_margin = float(np.min(np.cos(k * (th[:, None] - phases[None, :]))))
        if min(self.margin_a, self.margin_b, self.arc_margin) <= delta1:
            from .errors import DirectionError

            raise DirectionError(
                f"no positive margin for the cocycle {a}->{b}: rays {self.margin_a:.3g}, {self.margin_b:.3g}, arc {self.arc_margin:.3g}"
            )
        self.min_margin = min(self.margin_a, self.margin_b, self.arc_margin)
        self.sing = singular_radii(spec, N)
        finite = self.sing[np.isfinite(self.sing)]
        self.rho = rho_fraction * self.sing
        M = int(math.ceil(math.log(1e-18) / math.log(rho_fraction))) + 24
        self.taylor = taylor_coefficients(spec, N, M)
        self.notes.append(
            f"rays {math.degrees(self.gamma_a):.4g} and {math.degrees(self.gamma_b):.4g} deg, arc margin {self.arc_margin:.4g}"
        )
        self._min_sing = float(finite.min()) if finite.size else math.inf

    # ---- pieces ---------------------------------------------------------

    def _tail(self, gamma, n, eps, T, rho):
        from .errors import RangeError
        from .laplace import DEFAULT_TOL, laplace_ray

        k = self.spec.k
        cosm = float(np.min(np.cos(k * (gamma - np.angle(T)))))
        Tmax = float(np.abs(T).max())
        R = 1.25 * (rho**k + Tmax**k * math.log(1.0 / DEFAULT_TOL) / cosm) ** (1.0 / k)
        for _ in range(6):
            fam = self._family(eps, gamma, R)
            try:
                return laplace_ray(fam.rays[n], k, gamma, T, r_lo=rho, delta1=self.delta1)
            except RangeError:
                R *= 1.6
        raise RangeError("cocycle tail did not reach its truncation radius")

    def _family(self, eps, gamma, R):
        p = self.a if gamma == self.gamma_a else self.b
        return self.cache.family(eps, gamma, self.N, R, p, self.config)

    def _arc(self, n, eps, T, rho):
        k = self.spec.k
        coeffs = self.taylor.at_eps(n, eps)
        out = np.zeros(T.shape, dtype=complex)
        x = (rho / np.abs(T)) ** k
        live = x * self.arc_margin < 800.0
        if not np.any(live):
            return out
        span = self.gamma_b - self.gamma_a
        panels = int(min(4000, max(16, math.ceil(float(x[live].max()) * k * abs(span) / math.pi) + 16)))
        from .numerics import gauss_legendre01

        x0, w0 = gauss_legendre01(ARC_ORDER)
        edges = np.linspace(0.0, 1.0, panels + 1)
        s = (edges[:-1, None] + np.diff(edges)[:, None] * x0[None, :]).ravel()
        w = (np.diff(edges)[:, None] * w0[None, :]).ravel() * span
        theta = self.gamma_a + span * s
        u = rho * np.exp(1j * theta)
        om = np.polynomial.polynomial.polyval(u, coeffs)
        Tl = T[live]
        kern = np.exp(-((u[None, :] / Tl[:, None]) ** k))
        out[live] = 1j * k * (kern * om[None, :]) @ w
        return out

    def theta(self, n: int, x, y) -> np.ndarray:
        """``Theta_n`` at probe ``x`` for the base points ``y`` (array)."""
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        if self.trivial or not np.isfinite(self.sing[n]):
            return np.zeros(y.shape, dtype=complex)
        x = complex(x)
        T = x * y
        if self.variant == "eps":
            groups = [(x, np.ones(y.shape, dtype=bool))]
        elif spec_eps_free(self.spec):
            groups = [(complex(y[0]), np.ones(y.shape, dtype=bool))]
        else:
            groups = [(complex(e), y == e) for e in np.unique(y)]
        out = np.zeros(y.shape, dtype=complex)
        rho = float(self.rho[n])
        # every piece is below exp(-800) there
        live = (rho / np.maximum(np.abs(T), 1e-300)) ** self.spec.k * self.min_margin < 800.0
        for eps, sel in groups:
            sel = sel & live
            if not np.any(sel):
                continue
            Ts = T[sel]
            out[sel] = (
                self._tail(self.gamma_b, n, eps, Ts, rho) - self._tail(self.gamma_a, n, eps, Ts, rho) + self._arc(n, eps, Ts, rho)
            )
        return out

    def theta_direct(self, n: int, x, y) -> np.ndarray:
        """Plain difference of the two full Laplace integrals (cancellation-prone; for checks)."""
        from .laplace import laplace_cut_radius, laplace_ray

        y = np.atleast_1d(np.asarray(y, dtype=complex))
        if self.trivial:
            return np.zeros(y.shape, dtype=complex)
        eps = complex(x) if self.variant == "eps" else complex(y[0])
        T = complex(x) * y
        k = self.spec.k
        vals = []
        for g in (self.gamma_b, self.gamma_a):
            cosm = float(np.min(np.cos(k * (g - np.angle(T)))))
            fam = self._family(eps, g, laplace_cut_radius(k, float(np.abs(T).max()), cosm))
            vals.append(laplace_ray(fam.rays[n], k, g, T, delta1=self.delta1))
        return vals[0] - vals[1]


def spec_eps_free(spec) -> bool:
    from .solution import spec_eps_independent

    return spec_eps_independent(spec)


@dataclass(frozen=True)
class CocycleSamples:
    """Norms of a cocycle at a list of probes, with the per-order sups."""

    pair: tuple
    probes: np.ndarray
    norms: np.ndarray
    tails: np.ndarray
    sups: np.ndarray  # (N_norm + 1, n_probes)
    notes: tuple = ()

    def to_json(self):
        return {
            "pair": list(self.pair),
            "probes": [{"re": float(z.real), "im": float(z.imag)} for z in self.probes],
            "norms": [float(v) for v in self.norms],
            "tails": [float(v) for v in self.tails],
            "notes": list(self.notes),
        }


def cocycle_samples(theta: Callable, probes, norm: NormSpec, grid: np.ndarray | None = None, pair=(0, 1), notes=()) -> CocycleSamples:
    """Norms of ``Theta(x) = sum_n Theta_n(x, .) z^n / n!`` for each probe ``x``.

    ``theta(n, x, y)`` returns ``Theta_n`` at the base points ``y``; only the
    points the norm actually uses are evaluated.
    """
    grid = norm_grid(norm) if grid is None else np.asarray(grid, dtype=complex)
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    absg = np.abs(grid)
    w = norm.weights()
    sups = np.zeros((norm.N_norm + 1, probes.size))
    for i, x in enumerate(probes):
        for n in range(norm.N_norm + 1):
            sel = absg <= norm.radius(n) * (1 + 1e-12)
            if not np.any(sel):
                raise DomainError(f"no sample points in the base sector cut to radius {norm.radius(n):.6g} (n = {n})")
            sups[n, i] = np.abs(theta(n, x, grid[sel])).max()
    terms = sups * w[:, None]
    norms = terms.sum(axis=0)
    tails = np.array([ratio_tail(enumerate(terms[:, i])) for i in range(probes.size)])
    return CocycleSamples(tuple(pair), probes, norms, tails, sups, tuple(notes))


def cocycle(sol_a, sol_b, probes, norm: NormSpec, grid: np.ndarray | None = None, evaluator: CocycleEvaluator | None = None) -> CocycleSamples:
    """Norm of ``u_b - u_a`` at each probe of the overlap of the two solutions' sectors.

    Raises
    ------
    DomainError
        If a probe lies outside the overlap.
    """
    cfg = sol_a.config
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    a, b = sol_a.p, sol_b.p
    n_sec = len(cfg.covering)
    sign = 1.0
    if b == (a - 1) % n_sec and a != b:
        a, b, sign = b, a, -1.0
    for x in probes:
        if not (bool(cfg.covering[a].contains(x)) and bool(cfg.covering[b].contains(x))):
            raise DomainError(f"probe {x!r} is not in the overlap of sectors {a} and {b}")
    grid = norm_grid(norm) if grid is None else np.asarray(grid, dtype=complex)
    if evaluator is None:
        evaluator = CocycleEvaluator(
            sol_a.spec, cfg, a, b, norm.N_norm, variant=sol_a.variant, cache=sol_a.cache, base_phases=np.angle(grid)
        )
    return cocycle_samples(lambda n, x, y: sign * evaluator.theta(n, x, y), probes, norm, grid, (sol_a.p, sol_b.p), tuple(evaluator.notes))


# --------------------------------------------------------------------------
# Cauchy-Heine coefficients
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CocycleRay:
    """A cocycle sampled along the ray of angle ``direction`` up to ``radius``.

    ``theta`` maps an array of points ``xi`` (shape ``(m,)``) to values of
    shape ``(m, ...)``.
    """

    direction: float
    radius: float
    theta: Callable


def cauchy_heine_coefficients(
    cocycles: Sequence[CocycleRay], n_max: int, *, order: int = 12, rel_tol: float = 1e-16, max_octaves: int = 80
) -> np.ndarray:
    """``a_n = sum_p (2 pi i)^-1 int_0^{rho_p} Theta_p(xi) xi^(-n-1) dxi`` for ``n <= n_max``.

    The integrals run over ``log |xi|`` in octaves from the outer radius
    inward, until the innermost octave contributes less than ``rel_tol``
    times the largest one for every ``n``.

    Raises
    ------
    PreconditionError
        If no such octave is reached: ``Theta_p`` does not decay toward 0.
    """
    from .errors import PreconditionError
    from .numerics import gauss_legendre01

    x0, w0 = gauss_legendre01(order)
    n = np.arange(n_max + 1)
    log2 = math.log(2.0)
    total = None
    for cr in cocycles:
        e = np.exp(1j * cr.direction)
        acc, peak = None, np.zeros(n_max + 1)
        for j in range(max_octaves + 1):
            r = cr.radius * np.exp(-(j + 1 - x0) * log2)
            xi = r * e
            th = np.asarray(cr.theta(xi), dtype=complex)
            pw = np.exp(-np.outer(n, np.log(xi))) * (w0 * log2)[None, :]
            contrib = np.tensordot(pw, th, axes=(1, 0))
            acc = contrib if acc is None else acc + contrib
            mag = np.abs(contrib).reshape(n_max + 1, -1).max(axis=1)
            peak = np.maximum(peak, mag)
            if j >= 3 and np.all(mag <= rel_tol * peak):
                break
        else:
            raise PreconditionError(f"cocycle on direction {cr.direction:.6g} does not decay toward the origin")
        total = acc if total is None else total + acc
    if total is None:
        return np.zeros(n_max + 1, dtype=complex)
    return total / (2j * math.pi)


# --------------------------------------------------------------------------
# remainder bounds of the asymptotic expansion
# --------------------------------------------------------------------------

# Truncation errors of the formal expansion are Laplace transforms of the
# Taylor remainder of omega_n: the Taylor tail itself near the origin (no
# cancellation) and ray values minus the truncation polynomial beyond.

SWITCH_FRACTION = 0.5


class RemainderEvaluator:
    """``u_{p,n} - sum_{m <= N} a_{m,n} x^m`` for one sectorial solution.

    The expansion variable ``x`` is ``eps`` in the ``eps`` variant and ``t`` in
    the ``t`` variant; the base points ``y`` are the other variable.
    """

    def __init__(self, spec, config, p: int, N_norm: int, *, variant=None, cache=None, base_phases=None,
                 probe_phases=None, root_clearance: float = math.radians(15.0), taylor_M: int = 96, delta1: float = 1e-3):
        from .formal import singular_radii, taylor_coefficients
        from .geometry import roots_of_borel_symbol
        from .solution import BorelCache, _robust_for

        self.spec, self.config, self.p, self.N_norm = spec, config, p, N_norm
        self.variant = variant or config.variant
        self.cache = cache or BorelCache(spec)
        self.delta1 = delta1
        sec = config.covering[p]
        comp = config.companion
        if base_phases is None:
            base_phases = comp.direction + np.linspace(-comp.half_opening, comp.half_opening, 9)
        if probe_phases is None:
            probe_phases = sec.direction + np.linspace(-sec.half_opening, sec.half_opening, 9) * 0.98
        phases = (np.asarray(probe_phases)[:, None] + np.asarray(base_phases)[None, :]).ravel()
        roots = roots_of_borel_symbol(spec.P, spec.k)
        self.direction, self.margin = _robust_for(config, p, spec.k, phases, root_clearance, roots)
        if self.margin <= delta1:
            from .errors import DirectionError

            raise DirectionError(f"no direction of U_{p} serves all probe phases (margin {self.margin:.3g})")
        self.sing = singular_radii(spec, N_norm)
        self.taylor = taylor_coefficients(spec, N_norm, taylor_M)

    def remainder(self, n: int, N: int, x, y) -> np.ndarray:
        return self.remainders(n, [N], x, y)[0]

    def remainders(self, n: int, orders, x, y) -> np.ndarray:
        """Remainders for several truncation orders, shape ``(len(orders), len(y))``.

        Only the highest order is Laplace-transformed; lower orders add the
        exact images ``Gamma(m/k) T^m`` of the dropped Taylor terms.
        """
        from .errors import RangeError
        from .laplace import laplace_cut_radius, laplace_ray
        from .numerics import gamma_real

        orders = [int(v) for v in orders]
        top = max(orders)
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        x = complex(x)
        T = x * y
        k = self.spec.k
        if self.variant == "eps" or spec_eps_free(self.spec):
            groups = [(x if self.variant == "eps" else complex(y[0]), np.ones(y.shape, dtype=bool))]
        else:
            groups = [(complex(e), y == e) for e in np.unique(y)]
        combined = self.variant == "eps"
        r_sw = min(1.0, SWITCH_FRACTION * float(self.sing[n]))
        out = np.zeros((len(orders),) + y.shape, dtype=complex)
        gam = self.direction
        gam_m = np.array([0.0] + [gamma_real(m / k) for m in range(1, self.taylor.M + 1)])
        for eps, sel in groups:
            tail = self.taylor.remainder_coeffs(n, eps, top, combined)
            trunc = self.taylor.at_eps(n, eps) - tail
            Ts = T[sel]
            cosm = float(np.min(np.cos(k * (gam - np.angle(Ts)))))
            R = laplace_cut_radius(k, float(np.abs(Ts).max()), cosm)
            for _ in range(6):
                fam = self.cache.family(eps, gam, self.N_norm, max(R, r_sw), self.p, self.config)

                def g(u, fam=fam, tail=tail, trunc=trunc):
                    u = np.asarray(u, dtype=complex)
                    au = np.abs(u)
                    res = np.polynomial.polynomial.polyval(u, tail)
                    far = au > r_sw
                    if np.any(far):
                        res[far] = fam.value(n, au[far]) - np.polynomial.polynomial.polyval(u[far], trunc)
                    return res

                try:
                    base = laplace_ray(g, k, gam, Ts, delta1=self.delta1)
                    break
                except RangeError:
                    R *= 1.6
            else:
                raise RangeError("remainder transform did not reach its truncation radius")
            for i, N in enumerate(orders):
                extra = (self.taylor.remainder_coeffs(n, eps, N, combined) - tail) * gam_m
                out[i, sel] = base + np.polynomial.polynomial.polyval(Ts, extra)
        return out


@dataclass(frozen=True)
class RSBoundReport:
    mode: str
    norm_variant: str
    constants: dict
    passed: bool
    orders: tuple
    n_samples: int
    max_violation: float
    slacks: dict | None
    samples: tuple = ()
    notes: tuple = ()

    def to_json(self):
        return {
            "mode": self.mode,
            "norm_variant": self.norm_variant,
            "constants": self.constants,
            "passed": self.passed,
            "orders": list(self.orders),
            "n_samples": self.n_samples,
            "max_violation": self.max_violation,
            "slacks": self.slacks,
            "samples": [{"N": int(a), "x": float(b), "y": float(c)} for a, b, c in self.samples],
            "notes": list(self.notes),
        }


def fit_rs_bound(N, x, y, k: float, *, mode: str = "gevrey", q: float | None = None, norm_variant: str = "") -> RSBoundReport:
    """Smallest ``(C, M)`` with ``y <= C M^(N+1) Gamma((N+1)/k) [q^((N+1)^2/2)] x^(N+1)``.

    Minimises ``log C + mean(N+1) log M``; ``mode`` is ``"gevrey"`` or
    ``"mixed"`` (which needs ``q``).  Vanishing samples are always satisfied.
    """
    if mode not in ("gevrey", "mixed"):
        raise DomainError(f"mode must be 'gevrey' or 'mixed', got {mode!r}")
    if mode == "mixed" and (q is None or q <= 1):
        raise DomainError("mixed mode needs q > 1")
    N = np.asarray(N, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if not (N.shape == x.shape == y.shape):
        raise DomainError("N, x and y must have the same length")
    if np.any(y < 0) or not np.all(np.isfinite(y)) or np.any(x <= 0) or np.any(N < 0):
        raise DomainError("remainder samples need y >= 0 finite, x > 0 and N >= 0")
    samples = tuple(zip(N.astype(int), x, y))
    orders = tuple(sorted(set(int(v) for v in N)))
    pos = y > 0
    if not np.any(pos):
        return RSBoundReport(mode, norm_variant, {"C": 0.0, "M": None, "zero": True}, True, orders, int(y.size), 0.0, None, samples,
                             ("all remainders vanish",))
    m = N[pos] + 1
    rhs = np.log(y[pos]) - gammaln(m / k) - m * np.log(x[pos])
    if mode == "mixed":
        rhs = rhs - 0.5 * m**2 * math.log(q)
    A = np.column_stack([np.ones_like(m), m])
    fit = fit_envelope(A, rhs, [1.0, float(m.mean())], [(-LOG_CONST_CAP * 10, LOG_CONST_CAP), (-LOG_RATE_CAP, LOG_RATE_CAP)])
    consts = {"log_C": float(fit.x[0]), "log_M": float(fit.x[1]), "k": float(k), "zero": False}
    if mode == "mixed":
        consts["q"] = float(q)
    notes = ()
    if fit.feasible:
        consts.update({"C": math.exp(fit.x[0]), "M": math.exp(fit.x[1])})
    else:
        notes = (f"no envelope within caps: {fit.message}",)
    return RSBoundReport(mode, norm_variant, consts, bool(fit.feasible), orders, int(y.size), float(fit.max_violation),
                         _slack_summary(fit.slacks), samples, notes)


def remainder_samples(evaluator: RemainderEvaluator, norm: NormSpec, grid: np.ndarray, orders, probes):
    """``(N, |x|, ||remainder_N(x)||)`` rows for every order and probe."""
    grid = np.asarray(grid, dtype=complex)
    absg = np.abs(grid)
    w = norm.weights()
    orders = [int(v) for v in orders]
    rows = []
    for x in np.atleast_1d(np.asarray(probes, dtype=complex)):
        tot = np.zeros(len(orders))
        for n in range(norm.N_norm + 1):
            sel = absg <= norm.radius(n) * (1 + 1e-12)
            if not np.any(sel):
                raise DomainError(f"no sample points in the base sector cut to radius {norm.radius(n):.6g}")
            tot += w[n] * np.abs(evaluator.remainders(n, orders, x, grid[sel])).max(axis=1)
        rows.extend((N, abs(x), float(v)) for N, v in zip(orders, tot))
    return rows


def rs_error_bound_check(evaluator: RemainderEvaluator, norm: NormSpec, orders, probes, *, mode: str = "gevrey",
                         grid: np.ndarray | None = None, rows=None) -> RSBoundReport:
    """Fit the remainder envelope of one sectorial solution's asymptotic expansion.

    The coefficients are the exact formal ones (Laplace images of the Taylor
    coefficients of the Borel functions).
    """
    grid = norm_grid(norm) if grid is None else grid
    if rows is None:
        rows = remainder_samples(evaluator, norm, grid, orders, probes)
    N, x, y = (np.array(v) for v in zip(*rows))
    return fit_rs_bound(N, x, y, evaluator.spec.k, mode=mode, q=norm.q, norm_variant=norm.variant)
