"""Experiment configuration: problem spec, geometry, grids, solver knobs."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .borel import SolverOptions
from .errors import DomainError
from .geometry import GoodCovering, Sector, build_admissible
from .problem import ProblemSpec


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    problem: ProblemSpec

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def section(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))

    def solver_options(self) -> SolverOptions:
        known = {f.name for f in fields(SolverOptions)}
        kw = {k: v for k, v in self.section("solver").items() if k in known}
        return SolverOptions(**kw)

    def admissible(self, variant: str = "eps", probes: int = 5):
        """Admissible configuration for ``variant`` with a sector-sampling probe grid."""
        geo = self.raw.get("geometry", {})
        if variant not in geo:
            raise DomainError(f"config has no geometry for variant {variant!r}")
        g = geo[variant]
        cov = g["covering"]
        covering = GoodCovering(tuple(Sector.from_json(s) for s in cov["sectors"]), float(cov["radius"]))
        companion = Sector.from_json(g["companion"])
        borel = tuple(Sector.from_json(s) for s in geo["borel_sectors"])
        grid = probe_grid(covering, companion, variant, probes)
        return build_admissible(covering, companion, borel, self.problem.P, self.problem.k, grid, variant)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sector_samples(sec: Sector, n_radii: int, n_angles: int, r_max: float | None = None) -> np.ndarray:
    """Points strictly inside a bounded sector: an angle x radius tensor grid."""
    R = sec.radius if r_max is None else min(r_max, sec.radius)
    inset = 1e-6 * sec.half_opening
    angs = sec.direction + np.linspace(-sec.half_opening + inset, sec.half_opening - inset, n_angles)
    radii = R * np.linspace(1.0 / n_radii, 1.0, n_radii) * (1 - 1e-9)
    return (radii[:, None] * np.exp(1j * angs)[None, :]).ravel()


def probe_grid(covering: GoodCovering, companion: Sector, variant: str, n: int = 5):
    pairs = []
    comp = sector_samples(companion, 2, n)
    for sec in covering.sectors:
        cov = sector_samples(sec, 2, 2 * n + 1)
        for a in comp:
            for b in cov:
                pairs.append((a, b) if variant == "eps" else (b, a))
    return pairs


def load_config(path) -> RunConfig:
    """Parse a JSON config file.

    Raises
    ------
    DomainError
        For malformed documents, with the JSON line/column or missing field.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise DomainError("config must be a JSON object")
    raw = copy.deepcopy(raw)
    prob = raw.get("problem", raw)
    return RunConfig(raw, ProblemSpec.from_json(prob))


def builtin_config(name: str = "toy1") -> RunConfig:
    data = resources.files("qgevrey").joinpath("data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return config_from_dict(json.loads(data))


def builtin_path(name: str = "toy1") -> Path:
    return Path(str(resources.files("qgevrey").joinpath("data").joinpath(f"{name}.json")))
