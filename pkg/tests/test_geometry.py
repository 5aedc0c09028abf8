import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgevrey.errors import AdmissibilityError, DomainError, InfeasibleDirectionError
from qgevrey.geometry import (
    DEFAULT_INSET,
    GoodCovering,
    Sector,
    build_admissible,
    choose_direction,
    is_good_covering,
    roots_of_borel_symbol,
)

TOY_P = [1, 0, 0, 1]


def _sectors(dirs, half, radius=0.1):
    return [Sector.from_degrees(d, half, radius) for d in dirs]


def _bullets(rep):
    return {b for b, _, _ in rep.violations}


def test_three_sector_covering_passes():
    rep = is_good_covering(_sectors([0, 120, 240], 75))
    assert rep.passed and not rep.violations


def test_two_sectors_miss_a_direction():
    rep = is_good_covering(_sectors([0, 180], 60))
    assert not rep.passed
    assert "union" in _bullets(rep)
    witnesses = [w for b, w, _ in rep.violations if b == "union"]
    assert any(abs(math.cos(w)) < math.cos(math.radians(60)) for w in witnesses)


def test_three_sectors_leave_gap_near_270():
    rep = is_good_covering(_sectors([0, 90, 180], 89))
    assert not rep.passed and "union" in _bullets(rep)


def test_triple_intersection_detected():
    rep = is_good_covering(_sectors([0, 90, 180, 270], 100))
    assert "triple-intersection" in _bullets(rep)


def test_unbounded_sector_rejected():
    with pytest.raises(DomainError):
        is_good_covering([Sector.from_degrees(0, 75), *_sectors([120, 240], 75)])


def test_sector_validation():
    with pytest.raises(DomainError):
        Sector(0.0, 0.0)
    with pytest.raises(DomainError):
        Sector(0.0, 0.5, -1.0)


def test_sector_contains():
    s = Sector.from_degrees(0, 30, 1.0)
    assert s.contains(0.5)
    assert not s.contains(0.5 * np.exp(1j * math.radians(40)))
    assert not s.contains(2.0)


def test_covering_overlap_bisector():
    cov = GoodCovering.regular(3, math.radians(75), 0.1)
    lo, hi = cov.overlap_interval(0)
    assert math.degrees(hi - lo) == pytest.approx(30)
    assert math.degrees(cov.overlap_bisector(0)) % 360 == pytest.approx(60)


def test_roots_cube_of_minus_one():
    roots = roots_of_borel_symbol(TOY_P, 1)
    expected = [np.exp(1j * np.pi / 3), -1.0, np.exp(-1j * np.pi / 3)]
    for e in expected:
        assert np.min(np.abs(roots - e)) < 1e-12
    assert len(roots) == 3


def test_roots_k2():
    roots = roots_of_borel_symbol([1, 1], 2)
    assert sorted(roots.imag) == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)], abs=1e-12)
    assert np.allclose(roots.real, 0, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_constant_symbol_rejected(k):
    with pytest.raises(DomainError):
        roots_of_borel_symbol([2], k)


def test_choose_direction_aligned():
    gamma, margin = choose_direction(Sector.from_degrees(0, 50), 1, 0.0)
    assert gamma == pytest.approx(0, abs=1e-12)
    assert margin == pytest.approx(1.0)


def test_choose_direction_infeasible():
    with pytest.raises(InfeasibleDirectionError):
        choose_direction(Sector.from_degrees(0, 10), 1, math.pi)


def test_choose_direction_boundary_clamped():
    gamma, margin = choose_direction(Sector.from_degrees(60, 30), 2, 0.0)
    assert gamma == pytest.approx(math.radians(30) + DEFAULT_INSET)
    assert margin == pytest.approx(math.cos(2 * gamma))
    assert margin == pytest.approx(0.5, abs=0.07)


@given(st.floats(-math.pi, math.pi), st.sampled_from([1, 2, 3]))
def test_choose_direction_stays_inside(phase, k):
    U = Sector.from_degrees(0, 55)
    try:
        gamma, margin = choose_direction(U, k, phase)
    except InfeasibleDirectionError:
        return
    assert abs(gamma) <= U.half_opening - DEFAULT_INSET + 1e-12
    assert margin > 0
    assert margin == pytest.approx(math.cos(k * (gamma - phase)))


@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_choose_direction_rotation_equivariant(phase, rot):
    U = Sector.from_degrees(0, 55)
    try:
        g0, m0 = choose_direction(U, 1, phase)
    except InfeasibleDirectionError:
        return
    g1, m1 = choose_direction(U.rotated(rot), 1, phase + rot)
    assert m1 == pytest.approx(m0, abs=1e-9)
    assert math.cos(g1 - g0 - rot) == pytest.approx(1.0, abs=1e-9)


def _toy_geometry(half0=55):
    cov = GoodCovering.regular(3, math.radians(75), 0.12)
    comp = Sector.from_degrees(0, 10, 1.0)
    borel = [Sector.from_degrees(0, half0)] + [Sector.from_degrees(d, 55) for d in (120, 240)]
    return cov, comp, borel


def test_toy1_admissible(toy1_eps):
    assert len(toy1_eps.margins) == 3
    assert min(toy1_eps.margins) >= 0.5


def test_toy1_root_inside_sector():
    cov, comp, borel = _toy_geometry(65)
    with pytest.raises(AdmissibilityError) as info:
        build_admissible(cov, comp, borel, TOY_P, 1, [(0.5, 0.05)])
    assert abs(info.value.witness - np.exp(1j * np.pi / 3)) < 1e-12


def test_empty_probe_grid_warns():
    cov, comp, borel = _toy_geometry()
    cfg = build_admissible(cov, comp, borel, TOY_P, 1, [])
    assert cfg.margins == (None, None, None)
    assert any("margin undefined" in w for w in cfg.warnings)


def test_infeasible_probe_reports_witness():
    cov, comp, borel = _toy_geometry()
    bad = (-1.0, 0.05)  # eps*t points at 180 degrees, opposite U_0
    with pytest.raises(AdmissibilityError) as info:
        build_admissible(cov, comp, borel, TOY_P, 1, [bad])
    assert info.value.witness == bad
