import numpy as np
import pytest

from qgevrey.borel import (
    SolverOptions,
    recursion_step,
    solve_family,
    verify_coeff_bounds,
    write_family_csv,
)
from qgevrey.errors import DomainError
from qgevrey.problem import CauchyData

BOUNDS = ("ray-growth", "disc", "annulus")


def omega2(q, u):
    return q * u**3 / (2 * (1 + u**3))


@pytest.fixture(scope="module")
def family(toy1, toy1_eps):
    return solve_family(toy1.problem, toy1_eps, 0, 0.05, 8, 1.0, options=toy1.solver_options())


@pytest.fixture(scope="module")
def zero_family(toy1, toy1_eps):
    spec = toy1.problem.with_(cauchy=CauchyData({}))
    return solve_family(spec, toy1_eps, 0, 0.05, 4, 1.0)


def test_omega2_matches_oracle(family):
    ray = family.rays[2]
    keep = ray.radii <= 1.0
    u = ray.radii[keep] * np.exp(1j * family.direction)
    exact = omega2(family.spec.q, u)
    assert np.max(np.abs(ray.values[keep] - exact) / np.abs(exact)) <= 1e-8


def test_odd_orders_vanish(family):
    for n in range(1, family.N + 1, 2):
        assert np.all(family.rays[n].values == 0)


def test_recursion_step_single_point(family):
    access = lambda m, v: family.value(m, np.abs(v))  # noqa: E731
    assert recursion_step(family.spec, 0, access, 0.5, 0.05) == 0
    val = recursion_step(family.spec, 1, access, 0.5, 0.05)
    assert val == pytest.approx(1.2 * 0.125 / 2.25, rel=1e-10)


def test_orders_finite_on_ray(family):
    for ray in family.rays:
        assert np.all(np.isfinite(ray.values))


def test_ray_disc_consistency(family):
    assert family.ray_disc_consistency() < 1e-8


def test_zero_data_gives_zero_family(zero_family):
    for ray in zero_family.rays:
        assert np.all(ray.values == 0)
    for disc in zero_family.discs:
        assert np.all(disc.values == 0)


def test_truncation_below_S(toy1, toy1_eps):
    with pytest.raises(DomainError):
        solve_family(toy1.problem, toy1_eps, 0, 0.05, 0, 1.0)


def test_eps_beyond_eps0(toy1, toy1_eps):
    with pytest.raises(DomainError):
        solve_family(toy1.problem, toy1_eps, 0, 0.5, 4, 1.0)


@pytest.mark.parametrize("which", BOUNDS)
def test_bounds_fit_toy1(family, which):
    rep = verify_coeff_bounds(family, which)
    assert rep.passed
    assert rep.max_violation <= 0
    assert all(np.isfinite(v) for v in rep.constants.values() if isinstance(v, float))


@pytest.mark.parametrize("which", BOUNDS)
def test_bounds_zero_family(zero_family, which):
    rep = verify_coeff_bounds(zero_family, which)
    assert rep.passed and rep.zero_family


def test_injected_blowup_fails(family):
    N = family.N
    bad = family.with_ray_values(N, family.rays[N].values * family.spec.q ** (N**3))
    assert not verify_coeff_bounds(bad, "ray-growth").passed


def test_unknown_bound(family):
    with pytest.raises(DomainError):
        verify_coeff_bounds(family, "no-such-bound")


def test_options_refined_is_finer():
    o = SolverOptions()
    r = o.refined()
    assert r.per_decade > o.per_decade


def test_family_csv(family, tmp_path):
    path = tmp_path / "fam.csv"
    write_family_csv([family], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "p,n,grid,radius,angle_deg,re,im"
    assert len(lines) > 10
