"""Sectors with vertex at the origin, good coverings, and admissible configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import AdmissibilityError, DomainError, InfeasibleDirectionError

TWO_PI = 2.0 * math.pi
DEFAULT_INSET = math.radians(2.0)


def wrap_angle(a):
    """Map angles to ``[-pi, pi)``."""
    return (np.asarray(a) + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class Sector:
    """``{z != 0 : |arg z - direction| < half_opening, |z| < radius}``; ``radius=None`` is unbounded."""

    direction: float
    half_opening: float
    radius: float | None = None

    def __post_init__(self):
        if not (0.0 < self.half_opening <= math.pi):
            raise DomainError(f"half opening must lie in (0, pi], got {self.half_opening!r}")
        if self.radius is not None and not self.radius > 0:
            raise DomainError("sector radius must be positive")

    @property
    def bounded(self) -> bool:
        return self.radius is not None

    @classmethod
    def from_degrees(cls, direction, half_opening, radius=None):
        return cls(math.radians(direction), math.radians(half_opening), radius)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        inside = (z != 0) & (np.abs(wrap_angle(np.angle(z) - self.direction)) < self.half_opening)
        if self.radius is not None:
            inside &= np.abs(z) < self.radius
        return inside

    def contains_direction(self, theta) -> bool:
        return bool(abs(float(wrap_angle(theta - self.direction))) < self.half_opening)

    def rotated(self, theta: float) -> "Sector":
        return Sector(float(wrap_angle(self.direction + theta)), self.half_opening, self.radius)

    def to_json(self) -> dict:
        out = {
            "direction_deg": math.degrees(self.direction),
            "half_opening_deg": math.degrees(self.half_opening),
        }
        if self.radius is not None:
            out["radius"] = self.radius
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Sector":
        return cls.from_degrees(d["direction_deg"], d["half_opening_deg"], d.get("radius"))


# --------------------------------------------------------------------------
# good coverings
# --------------------------------------------------------------------------


def _in_arc(theta, start, length):
    # open arc (start, start + length) on the circle
    off = (theta - start) % TWO_PI
    return 0.0 < off < length


@dataclass(frozen=True)
class CoveringReport:
    passed: bool
    violations: tuple = ()

    def to_json(self):
        return {
            "passed": self.passed,
            "violations": [
                {"bullet": b, "witness_deg": None if w is None else math.degrees(w), "detail": d}
                for b, w, d in self.violations
            ],
        }


def is_good_covering(sectors, punctured_disc_radius: float | None = None) -> CoveringReport:
    """Check the three good-covering conditions on bounded sectors.

    The test is combinatorial on the angular arcs ``(d - delta, d + delta)``:
    the circle is cut at all arc endpoints and every elementary arc midpoint
    and every endpoint is classified.  Violations carry a witness direction.
    """
    sectors = list(sectors)
    if len(sectors) < 2:
        raise DomainError("a good covering needs at least two sectors")
    if any(not s.bounded for s in sectors):
        raise DomainError("good coverings consist of bounded sectors")
    n = len(sectors)
    starts = [(s.direction - s.half_opening) % TWO_PI for s in sectors]
    lengths = [2.0 * s.half_opening for s in sectors]

    cuts = sorted(set(starts + [(a + l) % TWO_PI for a, l in zip(starts, lengths)]))
    mids = []
    for i, c in enumerate(cuts):
        nxt = cuts[i + 1] if i + 1 < len(cuts) else cuts[0] + TWO_PI
        mids.append(((c + nxt) / 2.0) % TWO_PI)
    probes = mids + cuts

    def members(theta):
        return [i for i in range(n) if _in_arc(theta, starts[i], lengths[i])]

    violations = []
    pairs = [(0, 1)] if n == 2 else [(j, (j + 1) % n) for j in range(n)]
    for j, j1 in pairs:
        common = [th for th in probes if j in members(th) and j1 in members(th)]
        if not common:
            mid = math.atan2(
                math.sin(sectors[j].direction) + math.sin(sectors[j1].direction),
                math.cos(sectors[j].direction) + math.cos(sectors[j1].direction),
            )
            violations.append(("consecutive-overlap", mid, f"sectors {j} and {j1} do not overlap"))
    for th in probes:
        m = members(th)
        if len(m) >= 3:
            violations.append(("triple-intersection", th, f"sectors {m[:3]} share this direction"))
            break
    for th in probes:
        if not members(th):
            violations.append(("union", th, "direction not covered"))
            break
    min_radius = min(s.radius for s in sectors)
    if punctured_disc_radius is not None and punctured_disc_radius > min_radius:
        violations.append(
            ("punctured-disc", None, f"radius {punctured_disc_radius} exceeds smallest sector radius {min_radius}")
        )
    return CoveringReport(not violations, tuple(violations))


@dataclass(frozen=True)
class GoodCovering:
    sectors: tuple
    punctured_disc_radius: float

    def __post_init__(self):
        report = is_good_covering(self.sectors, self.punctured_disc_radius)
        if not report.passed:
            raise DomainError(f"not a good covering: {report.violations}")
        object.__setattr__(self, "sectors", tuple(self.sectors))

    def __len__(self):
        return len(self.sectors)

    def __getitem__(self, p):
        return self.sectors[p % len(self.sectors)]

    def overlap_bisector(self, p: int) -> float:
        """Direction bisecting the overlap of sectors ``p`` and ``p + 1``."""
        a, b = self[p], self[p + 1]
        lo_a, hi_a = a.direction - a.half_opening, a.direction + a.half_opening
        shift = float(wrap_angle(b.direction - a.direction))
        lo_b = a.direction + shift - b.half_opening
        hi_b = a.direction + shift + b.half_opening
        lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
        if lo >= hi:
            raise DomainError(f"sectors {p} and {p + 1} do not overlap")
        return float(wrap_angle((lo + hi) / 2.0))

    def overlap_interval(self, p: int):
        """``(lo, hi)`` angles of the overlap of sectors ``p`` and ``p + 1``."""
        mid = self.overlap_bisector(p)
        a, b = self[p], self[p + 1]
        hw = min(
            a.half_opening - abs(float(wrap_angle(mid - a.direction))),
            b.half_opening - abs(float(wrap_angle(mid - b.direction))),
        )
        return mid - hw, mid + hw

    @classmethod
    def regular(cls, n: int, half_opening: float, radius: float, offset: float = 0.0):
        secs = [Sector(float(wrap_angle(offset + TWO_PI * j / n)), half_opening, radius) for j in range(n)]
        return cls(tuple(secs), radius)


# --------------------------------------------------------------------------
# Borel symbol roots and directions
# --------------------------------------------------------------------------


def poly_eval(coeffs, x):
    """Evaluate a polynomial given by ascending coefficients."""
    return np.polynomial.polynomial.polyval(x, np.asarray(coeffs, dtype=complex))


def roots_of_borel_symbol(P, k: int) -> np.ndarray:
    """All ``k * deg P`` roots of ``u -> P(k u^k)``, sorted by argument.

    Roots of ``P`` come from companion-matrix eigenvalues with one Newton
    polish; each root ``tau`` then gives the ``k`` values ``(tau / k)^(1/k)``.
    """
    coeffs = np.trim_zeros(np.asarray(P, dtype=complex), "b")
    if coeffs.size < 2:
        raise DomainError("P must have degree >= 1")
    if coeffs[0] == 0:
        raise DomainError("P(0) must be nonzero")
    taus = np.polynomial.polynomial.polyroots(coeffs)
    dcoeffs = np.polynomial.polynomial.polyder(coeffs)
    for i, tau in enumerate(taus):
        d = poly_eval(dcoeffs, tau)
        if d != 0:
            taus[i] = tau - poly_eval(coeffs, tau) / d
    k = int(k)
    if k < 1:
        raise DomainError("k must be a positive integer")
    roots = []
    for tau in taus:
        base = (tau / k) ** (1.0 / k)
        roots.extend(base * np.exp(2j * math.pi * np.arange(k) / k))
    roots = np.array(roots)
    return roots[np.lexsort((np.abs(roots), np.round(np.angle(roots) % TWO_PI, 12) % TWO_PI))]


def _feasible_interval(U: Sector, inset: float):
    if U.bounded:
        raise DomainError("Borel sectors must be unbounded")
    if inset >= U.half_opening:
        raise DomainError("boundary inset swallows the whole sector")
    return U.direction - U.half_opening + inset, U.direction + U.half_opening - inset


def choose_direction(U: Sector, k: int, phase: float, inset: float = DEFAULT_INSET):
    """Ray direction inside ``U`` maximising ``cos(k (gamma - phase))``.

    Returns ``(gamma, margin)``.  Candidate maximisers are the peaks
    ``phase + 2 pi j / k`` lying in the inset interval, else its endpoints;
    ties go to the smaller angle.

    Raises
    ------
    InfeasibleDirectionError
        If the best cosine is not positive.
    """
    lo, hi = _feasible_interval(U, inset)
    period = TWO_PI / k
    j0 = math.ceil((lo - phase) / period)
    candidates = []
    j = j0
    while phase + j * period <= hi:
        candidates.append(phase + j * period)
        j += 1
    candidates += [lo, hi]
    best_gamma, best = None, -2.0
    for g in sorted(candidates):
        c = math.cos(k * (g - phase))
        if c > best + 1e-15:
            best_gamma, best = g, c
    if best <= 0.0:
        raise InfeasibleDirectionError(
            f"no ray in sector (dir {U.direction:.6g}, half {U.half_opening:.6g}) has positive "
            f"cosine margin for phase {phase:.6g}"
        )
    return best_gamma, best


def robust_direction(U: Sector, k: int, phases, inset: float = DEFAULT_INSET):
    """Single direction in ``U`` maximising the worst-case cosine over ``phases``."""
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise DomainError("robust_direction needs at least one phase")
    lo, hi = _feasible_interval(U, inset)

    def worst(g):
        return float(np.min(np.cos(k * (g - phases))))

    grid = np.linspace(lo, hi, 721)
    vals = np.array([worst(g) for g in grid])
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if b > a:
        res = minimize_scalar(lambda g: -worst(g), bounds=(a, b), method="bounded", options={"xatol": 1e-12})
        g_best = float(res.x) if -res.fun >= vals[i] else float(grid[i])
    else:
        g_best = float(grid[i])
    margin = worst(g_best)
    if margin <= 0.0:
        raise InfeasibleDirectionError("no single ray serves all requested phases")
    return g_best, margin


# --------------------------------------------------------------------------
# admissible configurations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibleConfig:
    """Covering + companion sector + Borel sectors, with recorded cosine margins."""

    covering: GoodCovering
    companion: Sector
    borel_sectors: tuple
    k: int
    variant: str = "eps"
    margins: tuple = ()
    warnings: tuple = field(default=())
    notes: tuple = field(default=())

    def covering_variable_sector(self, p: int) -> Sector:
        return self.covering[p]


def build_admissible(
    covering: GoodCovering,
    companion: Sector,
    borel_sectors,
    P,
    k: int,
    probe_grid=(),
    variant: str = "eps",
    inset: float = DEFAULT_INSET,
) -> AdmissibleConfig:
    """Verify root avoidance and direction feasibility and record margins.

    ``probe_grid`` is a list of ``(t, eps)`` pairs.  For the ``"eps"`` variant a
    probe is attached to every ``p`` with ``eps`` in the covering sector ``p``;
    for ``"t"`` the roles of ``t`` and ``eps`` swap.
    """
    if variant not in ("eps", "t"):
        raise DomainError("variant must be 'eps' or 't'")
    borel_sectors = tuple(borel_sectors)
    if len(borel_sectors) != len(covering):
        raise DomainError("one Borel sector per covering sector is required")
    for U in borel_sectors:
        if U.bounded:
            raise DomainError("Borel sectors must be unbounded")
    for root in roots_of_borel_symbol(P, k):
        for p, U in enumerate(borel_sectors):
            if U.contains(root):
                raise AdmissibilityError(f"root {root!r} of P(k u^k) lies inside U_{p}", witness=root)
    warnings, notes = [], []
    margins = []
    probes = list(probe_grid)
    for p, U in enumerate(borel_sectors):
        sec = covering[p]
        mins = None
        for t, eps in probes:
            var = eps if variant == "eps" else t
            if not sec.contains(var):
                continue
            try:
                _, m = choose_direction(U, k, float(np.angle(eps * t)), inset)
            except InfeasibleDirectionError as exc:
                raise AdmissibilityError(f"U_{p}: {exc}", witness=(t, eps)) from exc
            mins = m if mins is None else min(mins, m)
        if mins is None:
            warnings.append(f"no probe falls in covering sector {p}: margin undefined")
        margins.append(mins)
        # Laplace transforms along U_p live on sectors of opening < pi/k + 2 delta_U
        limit = math.pi / k + 2.0 * U.half_opening
        needed = 2.0 * (sec.half_opening + companion.half_opening)
        notes.append(
            f"U_{p}: Laplace sector opening limit {math.degrees(limit):.4g} deg, "
            f"phase range of eps*t spans {math.degrees(needed):.4g} deg"
        )
        if needed >= limit:
            warnings.append(f"U_{p}: phase range of eps*t exceeds the Laplace sector opening limit")
    return AdmissibleConfig(covering, companion, borel_sectors, int(k), variant, tuple(margins), tuple(warnings), tuple(notes))
