"""Acceptance criteria 1-9, one test each, each printing a PASS/FAIL line."""

import json
import math
import shutil
import time

import numpy as np
import pytest

from qgevrey.asymptotics import NormSpec, norm_grid, series_norm
from qgevrey.borel import solve_family, verify_coeff_bounds
from qgevrey.cli import main
from qgevrey.geometry import Sector
from qgevrey.pipeline import asym_paths, run_asym, run_solve, solve_paths
from qgevrey.selftest import classifier_battery, identity_battery
from qgevrey.solution import BorelCache, assemble, cauchy_consistency, pde_residual


@pytest.fixture
def report(capsys):
    def emit(num, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, f"criterion {num} failed: {detail}"

    return emit


def _asym(out, variant, norm):
    return json.loads(asym_paths(out, variant, norm)["report"].read_text())


@pytest.fixture(scope="module")
def t_run(tmp_path_factory, toy1):
    out = tmp_path_factory.mktemp("t-run")
    run_solve(toy1, out, variant="t", N=None, eps_grid=None, t_grid=None)
    for norm in ("q-relative", "sup"):
        run_asym(toy1, out, variant="t", norm_variant=norm, solve_inline=False)
    return out


def test_criterion_1_identity_suite(report):
    t0 = time.perf_counter()
    rep = identity_battery(draws=20, ks=(1, 2, 3))
    dt = time.perf_counter() - t0
    ok = all(v["passed"] for v in rep.values()) and dt <= 60
    detail = ", ".join(f"{k} {v['worst']:.1e}<={v['contract']:.0e}" for k, v in rep.items())
    report(1, "Laplace identity battery, 20 draws, k in {1,2,3}", ok, f"{detail}; {dt:.1f}s <= 60s")


def test_criterion_2_toy1_oracle(report, toy1, toy1_eps):
    t0 = time.perf_counter()
    fam = solve_family(toy1.problem, toy1_eps, 0, 0.05, 8, 1.0, options=toy1.solver_options())
    dt = time.perf_counter() - t0
    ray = fam.rays[2]
    keep = ray.radii <= 1.0
    u = ray.radii[keep] * np.exp(1j * fam.direction)
    exact = toy1.problem.q * u**3 / (2 * (1 + u**3))
    err = float(np.max(np.abs(ray.values[keep] - exact) / np.abs(exact)))
    odd_zero = all(np.all(fam.rays[n].values == 0) for n in (1, 3))
    ok = err <= 1e-8 and odd_zero and dt <= 30
    report(2, "omega_2 oracle, omega_1 = omega_3 = 0", ok, f"rel err {err:.1e} <= 1e-8, odd zero {odd_zero}, {dt:.1f}s <= 30s")


def test_criterion_3_pde_residual(report, toy1, toy1_eps):
    cache = BorelCache(toy1.problem, toy1.solver_options())
    t_grid = [0.2, 0.3 * np.exp(0.1j), 0.5, 0.7 * np.exp(-0.1j), 0.8]
    eps_grid = [0.03, 0.08 * np.exp(0.5j)]
    sol = assemble(toy1.problem, toy1_eps, 0, t_grid, eps_grid, 8, cache=cache)
    zs = sol.z_radius * np.array([0.1, 0.3, 0.5, 0.2 * np.exp(1j), 0.4j])
    res, gaps = [], []
    for i, t in enumerate(t_grid):
        for e in eps_grid:
            res.append(pde_residual(sol, t, zs[i], e))
            gaps.append(cauchy_consistency(sol, t, e))
    ok = len(res) == 10 and max(res) <= 1e-6 and max(gaps) <= 1e-8
    report(3, "PDE residual at 10 probes, N = 8", ok, f"max residual {max(res):.1e} <= 1e-6, Cauchy gap {max(gaps):.1e} <= 1e-8")


def test_criterion_4_flatness(report, eps_run):
    rep = _asym(eps_run, "eps", "q-relative")
    rows = []
    ok = len(rep["pairs"]) == 3
    for pair in rep["pairs"]:
        fit, free = pair["flatness"], pair["flatness_free_k"]
        B, r2, k = fit["constants"]["B"], fit["r2"], free["constants"]["k"]
        lo, hi = fit["x_range"]
        ok &= B is not None and B > 0 and r2 >= 0.99 and abs(k - 1) <= 0.15 and lo <= 0.02 + 1e-12 and hi >= 0.1 - 1e-12
        rows.append(f"{tuple(pair['pair'])}: B={B:.3g} R2={r2:.6f} k={k:.4f}")
    report(4, "exponential flatness of the 3 cocycles, |eps| in [0.02, 0.1]", ok, "; ".join(rows))


def test_criterion_5_bound_fits(report, toy1, toy1_eps):
    fam = solve_family(toy1.problem, toy1_eps, 0, 0.05, 8, 1.0, options=toy1.solver_options())
    rows, ok = [], True
    for which in ("ray-growth", "disc", "annulus"):
        rep = verify_coeff_bounds(fam, which, Delta=0.5)
        consts = [v for v in rep.constants.values() if isinstance(v, float)]
        finite = all(math.isfinite(v) for v in consts)
        ok &= rep.passed and rep.max_violation <= 0 and finite
        rows.append(f"{which}: violation {rep.max_violation:.1e}, finite {finite}")
    report(5, "coefficient bound envelopes, n <= 8, Delta = 1/2", ok, "; ".join(rows))


def test_criterion_6_classifier(report):
    rep = classifier_battery(s_tol=0.05, q_tol=0.1)
    s_err = max(abs(c["s_fit"] - c["s"]) for c in rep["cases"])
    q_err = max(abs(c["q_fit"] - c["q"]) for c in rep["cases"] if c["q"] is not None)
    report(6, "classifier battery", rep["passed"], f"{rep['correct']}/{rep['total']} correct, max |s err| {s_err:.3f}, max |q err| {q_err:.3f}")


def _rs(rep, mode):
    checks = [c["report"] for c in rep["rs_checks"] if c["mode"] == mode]
    good = bool(checks) and all(
        r["passed"] and r["orders"] == [0, 1, 2, 3, 4] and math.isfinite(r["constants"]["C"]) and math.isfinite(r["constants"]["M"])
        for r in checks
    )
    c = checks[0]["constants"] if checks else {}
    return good, f"C={c.get('C', float('nan')):.3g} M={c.get('M', float('nan')):.3g}"


def test_criterion_7_rs_bounds(report, eps_run, t_run):
    rows, ok = [], True
    for variant, out in (("eps", eps_run), ("t", t_run)):
        g_ok, g = _rs(_asym(out, variant, "q-relative"), "gevrey")
        m_ok, m = _rs(_asym(out, variant, "sup"), "mixed")
        ok &= g_ok and m_ok
        rows.append(f"{variant}: Gevrey/q-relative {g}, mixed/sup {m}")
    report(7, "remainder bounds, N in {0..4}", ok, "; ".join(rows))


def test_criterion_8_norm_comparison(report):
    rng = np.random.default_rng(8)
    worst = -np.inf
    for _ in range(50):
        q, R1, N, radius = rng.uniform(1.05, 3), rng.uniform(0.2, 3), int(rng.integers(0, 8)), rng.uniform(0.2, 1.5)
        base = Sector.from_degrees(rng.uniform(-180, 180), rng.uniform(5, 80), radius)
        a, b = NormSpec("q-relative", base, q, R1, N), NormSpec("sup", base, q, R1, N)
        grid = norm_grid(a)
        c = rng.normal(size=(N + 1, 5)) + 1j * rng.normal(size=(N + 1, 5))
        vals = np.array([np.polynomial.polynomial.polyval(grid, c[n]) for n in range(N + 1)])
        worst = max(worst, series_norm(vals, a, grid).value - series_norm(vals, b, grid).value)
    report(8, "q-relative norm <= sup norm on 50 random polynomials", worst <= 0, f"max difference {worst:.3g} <= 0")


def test_criterion_9_determinism(report, eps_run, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        out.mkdir()
        for path in solve_paths(eps_run, "eps").values():
            shutil.copy(path, out / path.name)
        assert main(["asym", "toy1", "--variant", "eps", "--norm", "q-relative", "--out", str(out)]) == 0
        outs.append(out)
    paths = [asym_paths(o, "eps", "q-relative") for o in outs]
    same = {key: paths[0][key].read_bytes() == paths[1][key].read_bytes() for key in paths[0]}
    report(9, "byte-identical asym outputs across two runs", all(same.values()), ", ".join(f"{k} {v}" for k, v in same.items()))
