"""Data model of the Cauchy problem, hypothesis checks and the Cauchy-data correspondence.

Coefficients that depend on the perturbation parameter are polynomials in
``eps`` stored as dense ascending coefficient tuples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DomainError
from .numerics import gamma_real

EPS_DEGREE_CAP = 16


def _complex(x) -> complex:
    if isinstance(x, dict):
        return complex(float(x.get("re", 0.0)), float(x.get("im", 0.0)))
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    return complex(x)


def eps_poly(coeffs) -> tuple:
    """Normalise a polynomial in ``eps`` to a tuple of complex coefficients."""
    if np.ndim(coeffs) == 0:
        coeffs = [coeffs]
    out = tuple(_complex(c) for c in coeffs)
    if not out:
        raise DomainError("empty eps-polynomial")
    if len(out) - 1 > EPS_DEGREE_CAP:
        raise DomainError(f"eps-polynomial degree exceeds cap {EPS_DEGREE_CAP}")
    return out


def eval_eps_poly(coeffs, eps: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * eps + c
    return acc


def _poly_map(d, what: str) -> dict:
    out = {}
    for h, coeffs in dict(d).items():
        h = int(h)
        if h == 0:
            raise DomainError(f"{what}: power h = 0 is not allowed (the coefficient must vanish at the origin)")
        if h < 0:
            raise DomainError(f"{what}: negative power {h}")
        out[h] = eps_poly(coeffs)
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class MonomialTerm:
    """One term ``eps^Delta c(z, eps) t^l0 ((eps^k t^(k+1) d_t)^l1 d_z^l2 u)(q^l3 t, z, eps)``.

    ``coeffs`` maps ``h`` to the eps-polynomial multiplying ``z^h``.
    """

    l0: int
    l1: int
    l2: int
    l3: int
    delta: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("l0", "l1", "l2", "l3"):
            if int(getattr(self, name)) < 0:
                raise DomainError(f"term exponent {name} must be non-negative")
        if int(self.delta) < 1:
            raise DomainError("term exponent Delta must be a positive integer")
        object.__setattr__(self, "coeffs", _poly_map(self.coeffs, "term coefficient"))

    @property
    def ell(self) -> tuple:
        return (self.l0, self.l1, self.l2, self.l3)

    def coeff(self, h: int, eps: complex) -> complex:
        return eval_eps_poly(self.coeffs[h], eps)

    def eps_independent(self) -> bool:
        """True when the eps-prefactor of the Borel recursion is constant in eps."""
        return self.delta == self.l0 and all(len(c) == 1 for c in self.coeffs.values())

    def to_json(self) -> dict:
        return {
            "l0": self.l0,
            "l1": self.l1,
            "l2": self.l2,
            "l3": self.l3,
            "Delta": self.delta,
            "c": {str(h): [_complex_json(c) for c in v] for h, v in self.coeffs.items()},
        }


def _complex_json(c: complex):
    c = complex(c)
    return c.real if c.imag == 0 else {"re": c.real, "im": c.imag}


@dataclass(frozen=True)
class CauchyData:
    """Borel-plane Cauchy data ``P_j(u, eps) = sum_h p_{j,h}(eps) u^h`` for ``j < S``."""

    polys: dict

    def __post_init__(self):
        polys = {int(j): _poly_map(v, f"Cauchy datum {j}") for j, v in dict(self.polys).items()}
        object.__setattr__(self, "polys", dict(sorted(polys.items())))

    def get(self, j: int) -> dict:
        return self.polys.get(j, {})

    def is_zero(self) -> bool:
        return all(all(c == 0 for c in poly) for d in self.polys.values() for poly in d.values())

    def scaled(self, lam: complex) -> "CauchyData":
        return CauchyData({j: {h: [lam * c for c in p] for h, p in d.items()} for j, d in self.polys.items()})

    def evaluate(self, j: int, u, eps: complex):
        u = np.asarray(u, dtype=complex)
        out = np.zeros_like(u)
        for h, poly in self.get(j).items():
            out = out + eval_eps_poly(poly, eps) * u**h
        return out

    def to_json(self) -> dict:
        return {
            str(j): {str(h): [_complex_json(c) for c in p] for h, p in d.items()} for j, d in self.polys.items()
        }


@dataclass(frozen=True)
class ProblemSpec:
    k: int
    S: int
    q: float
    eps0: float
    P: tuple
    terms: tuple
    cauchy: CauchyData
    Delta: float = 0.5
    k1: float = 1.0
    literal_l0_exponent: bool = False
    name: str = "problem"

    def __post_init__(self):
        if int(self.k) < 1 or int(self.S) < 1:
            raise DomainError("k and S must be positive integers")
        if not self.q > 1.0:
            raise DomainError("q must exceed 1")
        if not self.eps0 > 0.0:
            raise DomainError("eps0 must be positive")
        P = tuple(_complex(c) for c in self.P)
        while len(P) > 1 and P[-1] == 0:
            P = P[:-1]
        if len(P) < 2:
            raise DomainError("P must have degree >= 1")
        if P[0] == 0:
            raise DomainError("P(0) must be nonzero")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.Delta < 0.5:
            raise DomainError("Delta must be at least 1/2")
        if not self.k1 > 0:
            raise DomainError("k1 must be positive")
        for j in self.cauchy.polys:
            if not 0 <= j < self.S:
                raise DomainError(f"Cauchy datum index {j} outside 0..S-1")
        for t in self.terms:
            # index n - h + l2 must stay below n + S
            if t.l2 >= self.S:
                raise DomainError(f"term {t.ell}: l2 >= S breaks well-foundedness of the recursion")

    @property
    def deg_P(self) -> int:
        return len(self.P) - 1

    def P_eval(self, tau):
        return np.polynomial.polynomial.polyval(tau, np.asarray(self.P))

    def borel_symbol(self, u):
        """``P(k u^k)``."""
        u = np.asarray(u, dtype=complex)
        return self.P_eval(self.k * u**self.k)

    @property
    def p_scale(self) -> float:
        return float(max(abs(c) for c in self.P))

    @property
    def max_l3(self) -> int:
        return max((t.l3 for t in self.terms), default=0)

    def with_(self, **kw) -> "ProblemSpec":
        return replace(self, **kw)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "k": self.k,
            "S": self.S,
            "q": self.q,
            "eps0": self.eps0,
            "Delta": self.Delta,
            "k1": self.k1,
            "P": [_complex_json(c) for c in self.P],
            "terms": [t.to_json() for t in self.terms],
            "cauchy": self.cauchy.to_json(),
            "literal_l0_exponent": self.literal_l0_exponent,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProblemSpec":
        try:
            terms = tuple(
                MonomialTerm(int(t["l0"]), int(t["l1"]), int(t["l2"]), int(t["l3"]), int(t["Delta"]), t["c"])
                for t in d["terms"]
            )
            return cls(
                k=int(d["k"]),
                S=int(d["S"]),
                q=float(d["q"]),
                eps0=float(d["eps0"]),
                P=tuple(d["P"]),
                terms=terms,
                cauchy=CauchyData(d.get("cauchy", {})),
                Delta=float(d.get("Delta", 0.5)),
                k1=float(d.get("k1", 1.0)),
                literal_l0_exponent=bool(d.get("literal_l0_exponent", False)),
                name=str(d.get("name", "problem")),
            )
        except KeyError as exc:
            raise DomainError(f"problem spec is missing field {exc}") from exc


def load_problem(path) -> ProblemSpec:
    with open(Path(path)) as fh:
        return ProblemSpec.from_json(json.load(fh))


# --------------------------------------------------------------------------
# hypothesis validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    term: tuple | None
    h: int | None
    slack: float
    passed: bool
    detail: str = ""

    def to_json(self):
        return {
            "check": self.name,
            "term": None if self.term is None else list(self.term),
            "h": self.h,
            "slack": self.slack,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def slack(self, name: str, term=None, h=None) -> float:
        for c in self.checks:
            if c.name == name and (term is None or c.term == tuple(term)) and (h is None or c.h == h):
                return c.slack
        raise KeyError(name)

    def to_json(self):
        return {"passed": self.passed, "checks": [c.to_json() for c in self.checks]}


def validate(spec: ProblemSpec, Delta: float | None = None, k1: float | None = None) -> HypothesisReport:
    """Evaluate every structural and growth hypothesis with its numeric slack.

    Slack is ``lhs - rhs`` for ``>``/``>=`` conditions and ``rhs - lhs`` for
    ``<``, so positive slack means the inequality holds (``>=`` also accepts 0).
    """
    D = spec.Delta if Delta is None else Delta
    k1 = spec.k1 if k1 is None else k1
    k, S = spec.k, spec.S
    checks = []
    for t in spec.terms:
        l0, l1, l2, l3 = t.ell
        checks.append(Check("l2<S", t.ell, None, float(S - l2), l2 < S))
        checks.append(Check("S>=l2+l3", t.ell, None, float(S - l2 - l3), S >= l2 + l3))
        checks.append(
            Check("Delta_l>=l0", t.ell, None, float(t.delta - l0), t.delta >= l0, f"Delta_l={t.delta}, l0={l0}")
        )
        for h in t.coeffs:
            s1 = 2 * (l2 - h) * D + l0 + k * l1 - 2 * (S - 1) * D
            checks.append(Check("growth-i", t.ell, h, s1, s1 > 0))
            lhs = D * max(0, 2 * (l2 - h) - 1) - (l2 - h) ** 2 * D
            rhs = min(a * (l0 + k * l1) - a * a * D for a in (S - 1, S))
            checks.append(Check("growth-ii", t.ell, h, rhs - lhs, lhs < rhs))
        s3 = -2 * D * l3 + l0 + k * l1
        checks.append(Check("growth-iii", t.ell, None, s3, s3 > 0))
        s4 = k * spec.deg_P - (k * l1 + l0 + 2 * k1 * l3 * math.log(spec.q))
        checks.append(Check("degree", t.ell, None, s4, s4 >= 0, f"k deg P = {k * spec.deg_P}"))
    return HypothesisReport(tuple(checks))


def feasible_parameters(spec: ProblemSpec, k1_grid=None):
    """All ``(Delta, k1)`` pairs on a coarse grid for which :func:`validate` passes.

    ``Delta`` runs over ``[1/2, 4]`` in steps of ``1/4``; ``k1`` over a log grid.
    Sorted so that the first pair has the largest ``Delta``, then largest ``k1``.
    """
    if k1_grid is None:
        k1_grid = np.logspace(-2, 1, 13)
    pairs = []
    for D in np.arange(0.5, 4.0 + 1e-12, 0.25):
        for k1 in k1_grid:
            if validate(spec, float(D), float(k1)).passed:
                pairs.append((float(D), float(k1)))
    pairs.sort(key=lambda p: (-p[0], -p[1]))
    return pairs


# --------------------------------------------------------------------------
# Cauchy data correspondence
# --------------------------------------------------------------------------


def cauchy_to_physical(data: CauchyData, k: int, eps: complex, t, j: int = 0):
    """``phi_j(t, eps) = sum_h Gamma(h/k) p_{j,h}(eps) (eps t)^h``."""
    T = eps * np.asarray(t, dtype=complex)
    out = np.zeros_like(T)
    for h, poly in data.get(j).items():
        out = out + gamma_real(h / k) * eval_eps_poly(poly, eps) * T**h
    return complex(out) if np.ndim(out) == 0 else out


def physical_coefficients(data: CauchyData, k: int) -> dict:
    """Coefficients of ``phi_j`` as polynomials in ``T = eps t``: ``{j: {h: eps-poly}}``."""
    return {
        j: {h: tuple(gamma_real(h / k) * c for c in poly) for h, poly in d.items()} for j, d in data.polys.items()
    }


def physical_to_cauchy(phi: dict, k: int) -> CauchyData:
    """Inverse of :func:`physical_coefficients`: divide the ``h``-th coefficient by ``Gamma(h/k)``.

    ``phi`` maps ``j`` to either a dense ascending list (index = power) or a
    ``{h: eps-poly}`` mapping.
    """
    out = {}
    for j, coeffs in phi.items():
        if isinstance(coeffs, dict):
            items = {int(h): eps_poly(c) for h, c in coeffs.items()}
        else:
            items = {h: eps_poly(c) for h, c in enumerate(coeffs)}
        if 0 in items and any(c != 0 for c in items[0]):
            raise DomainError(f"phi_{j} has a constant term; data must vanish at t = 0")
        items.pop(0, None)
        out[int(j)] = {h: tuple(c / gamma_real(h / k) for c in p) for h, p in items.items() if any(c != 0 for c in p)}
    return CauchyData(out)
