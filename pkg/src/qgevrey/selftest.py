"""Self-test batteries: Laplace identities and synthetic fit/classifier fixtures."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma as sp_gamma
from scipy.special import gammaincc, gammaln

from . import laplace
from .asymptotics import (
    CocycleRay,
    cauchy_heine_coefficients,
    check_mixed_bound,
    classify_growth,
    fit_exponential_flatness,
    fit_rs_bound,
)

CONTRACTS = {"monomial": 1e-7, "derivative": 1e-5, "dilation": 1e-6, "convolution": 1e-5}
DILATION_Q = 1.5


def random_polynomial(rng: np.random.Generator, degree: int = 4) -> np.ndarray:
    """Ascending coefficients with ``c_0 = 0`` and ``c_1..c_degree`` uniform in the unit disc."""
    r = np.sqrt(rng.uniform(0, 1, degree))
    c = r * np.exp(2j * np.pi * rng.uniform(0, 1, degree))
    return np.concatenate([[0j], c])


def _poly(c):
    return lambda u: np.polynomial.polynomial.polyval(np.asarray(u, dtype=complex), c)


def identity_battery(draws: int = 20, ks=(1, 2, 3), seed: int = 0) -> dict:
    """Worst residual of each identity over ``draws`` random polynomials per ``k``.

    ``T`` is drawn with modulus in ``[0.1, 0.6]`` so the dilation radius
    constraint ``|T|^k < 1 / q^k`` holds for ``q = 1.5`` (polynomials grow
    slower than ``exp(|u|^k)`` at the scale that matters).
    """
    rng = np.random.default_rng(seed)
    worst = {name: 0.0 for name in CONTRACTS}
    for k in ks:
        for _ in range(draws):
            c = random_polynomial(rng)
            f = _poly(c)
            T = complex(rng.uniform(0.1, 0.6) * np.exp(1j * rng.uniform(-np.pi, np.pi)))
            h = int(rng.integers(1, 5))
            m = int(rng.integers(1, 4))
            res = {
                "monomial": laplace.check_monomial_identity(h, k, T),
                "derivative": laplace.check_derivative_identity(f, k, T),
                "dilation": laplace.check_dilation_identity(f, k, 1, DILATION_Q, T),
                "convolution": laplace.check_convolution_identity(m, f, k, T),
            }
            for name, v in res.items():
                worst[name] = max(worst[name], float(v)) if np.isfinite(v) else float("inf")
    return {
        name: {"worst": worst[name], "contract": CONTRACTS[name], "passed": worst[name] <= CONTRACTS[name]}
        for name in CONTRACTS
    }


def classifier_cases():
    """Ten Gevrey and ten mixed synthetic sequences with their ground truth."""
    cases = []
    gev = [(1 / 3, 1.0), (1 / 3, 0.5), (1 / 3, 2.0), (0.5, 1.0), (0.5, 3.0), (0.5, 0.7), (1.0, 1.0), (1.0, 0.25), (1.0, 4.0), (0.5, 1.5)]
    for s, c in gev:
        cases.append({"truth": "Gevrey", "s": s, "q": None, "c": c})
    mixed = [(1.2, 1.0), (1.2, 0.5), (1.2, 1 / 3), (1.5, 1.0), (1.5, 0.5), (1.5, 1 / 3), (2.0, 1.0), (2.0, 0.5), (2.0, 1 / 3), (1.5, 1.0)]
    for i, (q, s) in enumerate(mixed):
        cases.append({"truth": "mixed", "s": s, "q": q, "c": 0.5 + 0.25 * i})
    return cases


def case_sequence(case, n_terms: int = 31) -> np.ndarray:
    n = np.arange(n_terms, dtype=float)
    la = gammaln(np.maximum(n * case["s"], 1e-300)) + n * math.log(case["c"])
    if case["q"] is not None:
        la = la + 0.5 * n**2 * math.log(case["q"])
    a = np.exp(la)
    a[0] = 0.0
    return a


def classifier_battery(s_tol: float = 0.05, q_tol: float = 0.1) -> dict:
    rows = []
    for case in classifier_cases():
        g = classify_growth(case_sequence(case))
        ok = g.verdict == case["truth"] and abs(g.s - case["s"]) <= s_tol
        if case["q"] is not None:
            ok = ok and g.q_hat is not None and abs(g.q_hat - case["q"]) <= q_tol
        rows.append({"truth": case["truth"], "s": case["s"], "q": case["q"], "verdict": g.verdict, "s_fit": g.s, "q_fit": g.q_hat, "passed": bool(ok)})
    return {"correct": sum(r["passed"] for r in rows), "total": len(rows), "passed": all(r["passed"] for r in rows), "cases": rows}


def fit_battery() -> dict:
    """Noiseless flatness, mixed-bound, remainder-bound and Cauchy-Heine fixtures."""
    out = {}
    x = np.linspace(0.2, 1.0, 12)
    worst = 0.0
    for k in (1, 2, 3):
        f = fit_exponential_flatness(x, 2 * np.exp(-3 / x**k), k)
        worst = max(worst, abs(f.constants["A"] - 2), abs(f.constants["B"] - 3), 1 - f.r2)
    out["flatness"] = {"worst": worst, "passed": worst < 1e-9}
    fk = fit_exponential_flatness(x, np.exp(-1 / x), 2, free_k=True)
    out["free_k"] = {"k": fk.constants["k"], "passed": abs(fk.constants["k"] - 1) < 0.05}
    N = np.repeat([1, 2, 3, 4, 5], 6)
    xs = np.tile(np.linspace(0.02, 0.1, 6), 5)
    y = np.exp(N * math.log(2.0) + gammaln(N) + 0.5 * N**2 * math.log(1.2) + N * np.log(xs))
    mb = check_mixed_bound(N, xs, y, 1, 1.2)
    err = abs(mb.constants["log_A"]) + abs(mb.constants["log_B"] - math.log(2.0))
    bad = check_mixed_bound(N, xs, np.exp(N**3.0), 1, 1.2)
    out["mixed_bound"] = {"error": err, "violation_detected": not bad.passed, "passed": err < 1e-6 and not bad.passed}
    m = N + 1
    yr = 3.0 * 0.7**m * sp_gamma(m / 2.0) * xs**m
    rs = fit_rs_bound(N, xs, yr, 2)
    rerr = max(abs(rs.constants["C"] / 3.0 - 1), abs(rs.constants["M"] / 0.7 - 1))
    out["rs_bound"] = {"error": rerr, "passed": rerr < 0.05}
    rho = 0.5
    a = cauchy_heine_coefficients([CocycleRay(0.0, rho, lambda xi: np.exp(-1 / xi))], 30)
    n = np.arange(1, 31)
    exact = gammaincc(n, 1 / rho) * sp_gamma(n) / (2j * math.pi)
    cerr = float(np.max(np.abs(a[1:] - exact) / np.abs(exact)))
    out["cauchy_heine"] = {"error": cerr, "passed": cerr < 1e-9}
    return out


def run_selftest(quick: bool = False, seed: int = 0) -> dict:
    """All batteries; ``quick`` runs 5 identity draws per ``k`` instead of 20."""
    ident = identity_battery(draws=5 if quick else 20, seed=seed)
    cls = classifier_battery()
    fits = fit_battery()
    passed = all(v["passed"] for v in ident.values()) and cls["passed"] and all(v["passed"] for v in fits.values())
    return {"passed": bool(passed), "quick": quick, "identities": ident, "classifier": cls, "fits": fits}
