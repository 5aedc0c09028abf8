"""Batch pipeline behind the command line: validate, solve, asym.

Every stage writes plain files into an output directory: JSON reports with
floats rounded to 15 significant digits (deterministic given the config) and
RFC-4180 CSV tables for plotting.  Column orders and field names are listed
in ``docs/schema.md``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import is_dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .asymptotics import (
    CocycleEvaluator,
    CocycleRay,
    NormSpec,
    RemainderEvaluator,
    cauchy_heine_coefficients,
    check_mixed_bound,
    classify_by_residue,
    classify_growth,
    cocycle_samples,
    fit_exponential_flatness,
    norm_grid,
    remainder_samples,
    rs_error_bound_check,
    term_sups,
)
from .borel import solve_family, verify_coeff_bounds, write_family_csv
from .config import RunConfig, canonical_json
from .errors import ArtifactError, DomainError, InsufficientDataError, PreconditionError, QGevreyError
from .formal import taylor_coefficients
from .problem import validate
from .solution import BorelCache, assemble, cauchy_consistency, evaluate, pde_residual_report, series_remainder, write_solution_csv

SCHEMA_VERSION = 1
VARIANTS = ("eps", "t")
NORMS = ("q-relative", "sup")
BOUNDS = ("ray-growth", "disc", "annulus")
DEFAULT_Z_FRACTIONS = (0.0, 0.25, 0.5)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def jsonable(obj):
    """Plain JSON data: floats at 15 significant digits, complex as ``{"re", "im"}``, non-finite as strings."""
    if hasattr(obj, "to_json") and (is_dataclass(obj) or not isinstance(obj, type)):
        return jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(format(x, ".15g"))


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def write_csv(header, rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".15g") if isinstance(v, (float, np.floating)) else v for v in row])


def _sha(obj) -> str:
    return hashlib.sha256(canonical_json(jsonable(obj)).encode()).hexdigest()


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------


def hypothesis_report(cfg: RunConfig) -> dict:
    """Growth and structure hypotheses plus admissibility of each configured geometry variant."""
    hyp = validate(cfg.problem)
    adm = {}
    for variant in VARIANTS:
        if variant not in cfg.raw.get("geometry", {}):
            continue
        try:
            a = cfg.admissible(variant)
            adm[variant] = {"passed": True, "margins": list(a.margins), "warnings": list(a.warnings), "notes": list(a.notes)}
        except QGevreyError as exc:
            adm[variant] = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
    passed = hyp.passed and all(v["passed"] for v in adm.values())
    return {"passed": bool(passed), "hypotheses": hyp.to_json(), "admissibility": adm}


def provenance(cfg: RunConfig, hyp: dict | None = None) -> dict:
    hyp = hypothesis_report(cfg) if hyp is None else hyp
    return {"config_sha256": cfg.digest(), "hypothesis_sha256": _sha(hyp)}


def run_validate(cfg: RunConfig) -> dict:
    hyp = hypothesis_report(cfg)
    return {"schema_version": SCHEMA_VERSION, "command": "validate", **hyp, "provenance": provenance(cfg, hyp)}


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------


def sector_grid(values, direction: float) -> np.ndarray:
    """Grid values given relative to a sector bisector, rotated onto it."""
    return np.asarray(values, dtype=complex).ravel() * np.exp(1j * direction)


def _check_variant(variant):
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}, got {variant!r}")


def solve_paths(out, variant: str) -> dict:
    out = Path(out)
    return {
        "report": out / f"solve_{variant}_report.json",
        "families": out / f"families_{variant}.csv",
        "solution": out / f"solution_{variant}.csv",
    }


def run_solve(cfg: RunConfig, out, *, variant: str = "eps", N: int | None = None, eps_grid=None, t_grid=None) -> dict:
    """Solve the Borel families, assemble every sectorial solution and fit the coefficient bounds.

    Grid values are relative to the covering sector: in the ``eps`` variant
    each ``eps`` value is rotated onto the bisector of ``E_p`` and ``t`` is
    taken as given; the ``t`` variant swaps the roles.
    """
    _check_variant(variant)
    spec = cfg.problem
    sec = cfg.section("solve")
    N = int(sec.get("N", 8) if N is None else N)
    if N < spec.S:
        raise DomainError(f"truncation N = {N} must be at least S = {spec.S}")
    eps_grid = np.asarray(sec.get("eps_grid", [0.05]) if eps_grid is None else eps_grid, dtype=complex)
    t_grid = np.asarray(sec.get("t_grid", [0.5]) if t_grid is None else t_grid, dtype=complex)
    zf = [float(v) for v in sec.get("z_fractions", DEFAULT_Z_FRACTIONS)]
    adm = cfg.admissible(variant)
    opts = cfg.solver_options()
    cache = BorelCache(spec, opts)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = solve_paths(out, variant)
    families, rows, per_p = [], [], []
    for p, cov in enumerate(adm.covering.sectors):
        if variant == "eps":
            eps_p, t_p = sector_grid(eps_grid, cov.direction), t_grid
        else:
            eps_p, t_p = eps_grid, sector_grid(t_grid, cov.direction)
        sol = assemble(spec, adm, p, t_p, eps_p, N, variant=variant, cache=cache, options=opts)
        fam = solve_family(spec, adm, p, eps_p[0], N, max(1.0, float(np.abs(t_p).max() * np.abs(eps_p).max())),
                           direction=sol.direction, options=opts)
        families.append(fam)
        fits = {}
        for b in BOUNDS:
            try:
                fits[b] = verify_coeff_bounds(fam, b).to_json()
            except DomainError as exc:
                fits[b] = {"passed": False, "error": str(exc)}
        residuals, cauchy = [], []
        for t in t_p:
            for e in eps_p:
                for f in zf:
                    z = f * sol.z_radius
                    rows.append((p, t, z, e, evaluate(sol, t, z, e), series_remainder(sol, t, z, e)))
                z = 0.5 * sol.z_radius
                rep = pde_residual_report(sol, t, z, e)
                residuals.append({"t": t, "eps": e, "z": z, **rep.to_json()})
                cauchy.append({"t": t, "eps": e, "gap": cauchy_consistency(sol, t, e)})
        per_p.append({
            "p": p,
            "direction_deg": math.degrees(sol.direction),
            "margin": sol.margin,
            "z_radius": sol.z_radius,
            "eps_grid": eps_p,
            "t_grid": t_p,
            "bound_fits": fits,
            "residuals": residuals,
            "max_residual": max(r["relative"] for r in residuals),
            "cauchy_consistency": cauchy,
            "max_cauchy_gap": max(c["gap"] for c in cauchy),
            "notes": list(sol.notes),
        })
    write_family_csv(families, paths["families"])
    write_solution_csv(rows, paths["solution"])
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "solve",
        "variant": variant,
        "N": N,
        "solutions": per_p,
        "passed": all(all(f.get("passed", False) for f in s["bound_fits"].values()) for s in per_p),
        "provenance": provenance(cfg),
    }
    write_json(report, paths["report"])
    return report


# --------------------------------------------------------------------------
# asym
# --------------------------------------------------------------------------


def asym_paths(out, variant: str, norm: str) -> dict:
    out = Path(out)
    tag = f"{variant}_{norm}"
    return {
        "report": out / f"asym_{tag}.json",
        "flatness": out / f"flatness_{tag}.csv",
        "mixed": out / f"mixed_bound_{tag}.csv",
        "coefficients": out / f"coefficients_{tag}.csv",
        "remainders": out / f"remainders_{tag}.csv",
    }


def require_solved(cfg: RunConfig, out, variant: str) -> dict:
    """The matching solve report, or :class:`ArtifactError` when it is missing or stale."""
    path = solve_paths(out, variant)["report"]
    if not path.exists():
        raise ArtifactError(f"missing solve artifacts: {path} (run 'solve' first or pass --solve-inline)")
    rep = json.loads(path.read_text(encoding="utf-8"))
    if rep.get("provenance", {}).get("config_sha256") != cfg.digest():
        raise ArtifactError(f"solve artifacts in {path} belong to a different config")
    return rep


def _theta_stack(ev: CocycleEvaluator, norm: NormSpec, grid: np.ndarray):
    """``xi -> Theta_n(xi, grid)`` of shape ``(m, N_norm + 1, len(grid))``, zero outside each cut set."""
    absg = np.abs(grid)
    masks = [absg <= norm.radius(n) * (1 + 1e-12) for n in range(norm.N_norm + 1)]

    def th(xi):
        out = np.zeros((len(xi), norm.N_norm + 1, grid.size), dtype=complex)
        for i, x in enumerate(xi):
            for n, sel in enumerate(masks):
                out[i, n, sel] = ev.theta(n, x, grid[sel])
        return out

    return th


def formal_norms(spec, norm: NormSpec, grid: np.ndarray, variant: str, m_max: int) -> np.ndarray:
    """Norms of the formal coefficients ``a_m`` (of ``eps^m`` or ``t^m``) for ``m <= m_max``.

    In the ``eps`` variant ``a_m(t)`` collects ``Gamma(m'/k) c[n][m', j] t^m'``
    over ``m' + j = m``; in the ``t`` variant
    ``a_m(eps) = Gamma(m/k) eps^m c_m(eps)``.
    """
    td = taylor_coefficients(spec, norm.N_norm, m_max + 1)
    w = norm.weights()
    y = np.asarray(grid, dtype=complex)
    out = np.zeros(m_max + 1)
    for m in range(m_max + 1):
        vals = np.zeros((norm.N_norm + 1, y.size), dtype=complex)
        for n in range(norm.N_norm + 1):
            W = td.watson(n)
            if variant == "eps":
                for mm in range(0, min(m, W.shape[0] - 1) + 1):
                    j = m - mm
                    if j < W.shape[1]:
                        vals[n] += W[mm, j] * y**mm
            elif m < W.shape[0]:
                vals[n] = y**m * np.polynomial.polynomial.polyval(y, W[m])
        out[m] = float((term_sups(vals, norm, y) * w).sum())
    return out


def _classify(mags, spec, label: str) -> dict:
    """Whole-sequence classification plus the residue-class analysis of its tail."""
    out = {}
    try:
        out["all"] = classify_growth(mags, spec.q, spec.k).to_json()
    except InsufficientDataError as exc:
        out["all"] = {"verdict": "insufficient-data", "notes": [f"{label}: {exc}"]}
    # the leading half is pre-asymptotic (convergent part, Stirling corrections)
    n_min = max(1, (len(mags) - 1) // 2)
    try:
        out["by_residue"] = classify_by_residue(mags, spec.q, spec.k, n_min=n_min)
    except InsufficientDataError as exc:
        out["by_residue"] = {"verdict": "insufficient-data", "notes": [f"{label}: {exc}"]}
    out["verdict"] = out["by_residue"]["verdict"]
    return out


def _rs_prediction(consts, mode, N, x, k):
    m = np.asarray(N, dtype=float) + 1
    if consts.get("zero") or consts.get("M") is None:
        return np.zeros_like(m)
    lp = consts["log_C"] + m * consts["log_M"] + gammaln(m / k) + m * np.log(x)
    if mode == "mixed":
        lp = lp + 0.5 * m**2 * math.log(consts["q"])
    return np.exp(lp)


def run_asym(cfg: RunConfig, out, *, variant: str = "eps", norm_variant: str = "q-relative", solve_inline: bool = False) -> dict:
    """Cocycle flatness, mixed bounds, Cauchy-Heine growth and remainder bounds for one variant and norm."""
    _check_variant(variant)
    if norm_variant not in NORMS:
        raise DomainError(f"norm must be one of {NORMS}, got {norm_variant!r}")
    out = Path(out)
    try:
        solved = require_solved(cfg, out, variant)
    except ArtifactError:
        if not solve_inline:
            raise
        solved = run_solve(cfg, out, variant=variant)
    spec = cfg.problem
    k, q = spec.k, spec.q
    a = cfg.section("asym")
    N = int(a.get("N", solved["N"]))
    adm = cfg.admissible(variant)
    norm = NormSpec(norm_variant, adm.companion, q, float(a.get("R1", 0.5)), N)
    grid = norm_grid(norm, int(a.get("companion_radii", 6)), int(a.get("companion_angles", 5)))
    ch_grid = norm_grid(norm, int(a.get("ch_radii", 2)), int(a.get("ch_angles", 3)))
    suffix = "" if variant == "eps" else "_t"
    radii = np.asarray(a.get("radii" + suffix, a.get("radii")), dtype=float)
    rs_radii = np.asarray(a.get("rs_radii" + suffix, a.get("rs_radii")), dtype=float)
    orders = [int(v) for v in a.get("rs_orders", range(5))]
    mixed_orders = np.asarray(a.get("mixed_orders", range(1, 7)), dtype=float)
    n_max = int(a.get("ch_n_max", 48))
    formal_max = int(a.get("formal_n_max", 60))
    cache = BorelCache(spec, cfg.solver_options())
    cov = adm.covering
    n_sec = len(cov)
    pairs, rays, flat_rows, mixed_rows = [], [], [], []
    for p in range(n_sec):
        b = (p + 1) % n_sec
        ev = CocycleEvaluator(spec, adm, p, b, N, variant=variant, cache=cache, base_phases=np.angle(grid))
        probes = sector_grid(radii, cov.overlap_bisector(p))
        cs = cocycle_samples(ev.theta, probes, norm, grid, (p, b), ev.notes)
        x = np.abs(probes)
        entry = {"pair": [p, b], "samples": cs, "arc_margin": ev.arc_margin, "ray_margins": [ev.margin_a, ev.margin_b]}
        if np.all(cs.norms > 0):
            fixed = fit_exponential_flatness(x, cs.norms, k)
            free = fit_exponential_flatness(x, cs.norms, k, free_k=True)
            entry.update({"flatness": fixed, "flatness_free_k": free})
            flat_rows += [(p, b, xi, yi, pi) for xi, yi, pi in zip(x, cs.norms, fixed.predict(x))]
        else:
            entry.update({"flatness": None, "flatness_free_k": None, "notes": ["cocycle vanishes at some probe"]})
        NN = np.repeat(mixed_orders, x.size)
        xx = np.tile(x, mixed_orders.size)
        yy = np.tile(cs.norms, mixed_orders.size)
        mb = check_mixed_bound(NN, xx, yy, k, q)
        entry["mixed_bound"] = mb
        if mb.constants.get("A") is not None:
            pred = mb.predict(xx, NN)
        else:
            pred = np.zeros_like(xx)
        mixed_rows += [(p, b, int(n_), xi, yi, pi) for n_, xi, yi, pi in zip(NN, xx, yy, pred)]
        pairs.append(entry)
        if not ev.trivial:
            rays.append(CocycleRay(cov.overlap_bisector(p), cov[p].radius, _theta_stack(ev, norm, ch_grid)))
    ch = {"n_max": n_max, "grid_points": int(ch_grid.size)}
    try:
        coeffs = cauchy_heine_coefficients(rays, n_max)
        ch_norms = np.array([(term_sups(coeffs[m], norm, ch_grid) * norm.weights()).sum() for m in range(n_max + 1)])
        ch.update({"norms": ch_norms, "classification": _classify(ch_norms, spec, "cauchy-heine")})
    except PreconditionError as exc:
        ch_norms = np.zeros(0)
        ch.update({"norms": [], "classification": {"verdict": "not-decaying", "notes": [str(exc)]}})
    fnorms = formal_norms(spec, norm, grid, variant, formal_max)
    formal = {"norms": fnorms, "classification": _classify(fnorms, spec, "formal")}
    rs, rs_rows = [], []
    for p in [int(v) for v in a.get("rs_sectors", [0])]:
        sec = cov[p]
        rev = RemainderEvaluator(spec, adm, p, N, variant=variant, cache=cache, base_phases=np.angle(grid))
        probes = sector_grid(rs_radii, sec.direction)
        rows = remainder_samples(rev, norm, grid, orders, probes)
        for mode in ("gevrey", "mixed"):
            rep = rs_error_bound_check(rev, norm, orders, probes, mode=mode, grid=grid, rows=rows)
            rs.append({"p": p, "mode": mode, "report": rep})
            Nr, xr, yr = (np.array(v, dtype=float) for v in zip(*rows))
            pr = _rs_prediction(rep.constants, mode, Nr, xr, k)
            rs_rows += [(p, mode, int(n_), xi, yi, pi) for n_, xi, yi, pi in zip(Nr, xr, yr, pr)]
    paths = asym_paths(out, variant, norm_variant)
    write_csv(["a", "b", "x", "y", "prediction"], flat_rows, paths["flatness"])
    write_csv(["a", "b", "N", "x", "y", "prediction"], mixed_rows, paths["mixed"])
    coef_rows = [("cauchy-heine", m, float(v)) for m, v in enumerate(ch_norms)]
    coef_rows += [("formal", m, float(v)) for m, v in enumerate(fnorms)]
    write_csv(["source", "n", "norm"], coef_rows, paths["coefficients"])
    write_csv(["p", "mode", "N", "x", "y", "prediction"], rs_rows, paths["remainders"])
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "asym",
        "variant": variant,
        "norm": norm,
        "N": N,
        "grid_points": int(grid.size),
        "pairs": pairs,
        "cauchy_heine": ch,
        "formal": formal,
        "rs_checks": rs,
        "summary": {
            "flat": all(e["flatness"] is not None and e["flatness"].passed for e in pairs),
            "mixed_bound": all(e["mixed_bound"].passed for e in pairs),
            "rs": {f"{r['p']}:{r['mode']}": r["report"].passed for r in rs},
        },
        "provenance": provenance(cfg),
    }
    write_json(report, paths["report"])
    return report
