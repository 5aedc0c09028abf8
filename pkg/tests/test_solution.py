import numpy as np
import pytest

from qgevrey.errors import DomainError
from qgevrey.problem import CauchyData
from qgevrey.solution import (
    BorelCache,
    assemble,
    cauchy_consistency,
    evaluate,
    pde_residual,
    pde_residual_report,
    write_solution_csv,
)


@pytest.fixture(scope="module")
def sol(toy1, toy1_eps):
    cache = BorelCache(toy1.problem, toy1.solver_options())
    return assemble(toy1.problem, toy1_eps, 0, [0.3, 0.5], [0.05], 8, cache=cache)


def test_value_at_z0(sol):
    assert evaluate(sol, 0.5, 0.0, 0.05) == pytest.approx(0.025, rel=1e-12)


def test_residual_interior(sol):
    assert pde_residual(sol, 0.3, 0.05, 0.05) <= 1e-6


def test_cauchy_consistency(sol):
    assert cauchy_consistency(sol, 0.3, 0.05) <= 1e-8


def test_z_outside_disc(sol):
    with pytest.raises(DomainError):
        evaluate(sol, 0.3, 10 * sol.z_radius, 0.05)


def test_grid_outside_sector(toy1, toy1_eps):
    with pytest.raises(DomainError):
        assemble(toy1.problem, toy1_eps, 0, [0.3], [-0.05], 4)


def test_zero_data(toy1, toy1_eps):
    spec = toy1.problem.with_(cauchy=CauchyData({}))
    zs = assemble(spec, toy1_eps, 0, [0.3], [0.05], 4)
    assert evaluate(zs, 0.3, 0.05, 0.05) == 0
    assert pde_residual(zs, 0.3, 0.05, 0.05) == 0


def test_minimal_truncation_tail_explains_residual(toy1, toy1_eps):
    s = assemble(toy1.problem, toy1_eps, 0, [0.3], [0.05], toy1.problem.S)
    rep = pde_residual_report(s, 0.3, 0.05, 0.05)
    assert rep.relative > 1e-3
    assert rep.explained_fraction >= 0.9


@pytest.mark.parametrize("p", [1, 2])
def test_other_sectors(toy1, toy1_eps, p):
    rot = np.exp(2j * np.pi * p / 3)
    s = assemble(toy1.problem, toy1_eps, p, [0.3], [0.05 * rot], 8)
    assert evaluate(s, 0.3, 0.0, 0.05 * rot) == pytest.approx(0.015 * rot, rel=1e-10)
    assert pde_residual(s, 0.3, 0.05, 0.05 * rot) <= 1e-6


def test_solution_csv(tmp_path):
    path = tmp_path / "sol.csv"
    write_solution_csv([(0, 0.3, 0.1, 0.05, 0.5 + 0.25j, 1e-9)], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "p,t_re,t_im,z_re,z_im,eps_re,eps_im,re,im,remainder"
    assert len(lines) == 2
