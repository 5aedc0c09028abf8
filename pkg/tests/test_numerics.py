import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as sp_gamma

from qgevrey.errors import DomainError, RangeError
from qgevrey.numerics import (
    DiscSampling,
    RaySampling,
    composite_legendre,
    gamma_real,
    geometric_radii,
    integrate_jacobi,
    interpolate_ray,
    log_gamma_real,
    ratio_tail,
)


@pytest.mark.parametrize("x", [0.1, 0.5, 1 / 3, 1.0, 2.5, 7.25, 33.3, 120.0])
def test_gamma_matches_scipy(x):
    assert gamma_real(x) == pytest.approx(sp_gamma(x), rel=1e-13)


def test_gamma_integers_exact():
    for n in range(1, 20):
        assert gamma_real(n) == math.factorial(n - 1)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan"), 171.0])
def test_gamma_domain(x):
    with pytest.raises(DomainError):
        gamma_real(x)


def test_log_gamma_beyond_guard():
    assert log_gamma_real(300.5) == pytest.approx(math.lgamma(300.5), rel=1e-14)


@given(st.floats(0.05, 30.0))
def test_gamma_recurrence(x):
    assert gamma_real(x + 1) == pytest.approx(x * gamma_real(x), rel=1e-12)


def test_geometric_radii_endpoints():
    r = geometric_radii(2.0, 1e-3, 10)
    assert r[-1] == 2.0 and r[0] == pytest.approx(1e-3)
    ratios = r[1:] / r[:-1]
    assert np.allclose(ratios, ratios[0])


def test_ray_sampling_validation():
    with pytest.raises(DomainError):
        RaySampling(0.0, [0.1], [1.0])
    with pytest.raises(DomainError):
        RaySampling(0.0, [0.2, 0.1], [1.0, 2.0])
    with pytest.raises(DomainError):
        RaySampling(0.0, [0.1, 0.2], [1.0, np.nan])


def test_interpolation_exact_at_nodes():
    r = geometric_radii(1.0, 1e-3, 16)
    f = RaySampling.from_function(lambda u: np.sin(u) + u**2, 0.0, r)
    assert np.allclose(interpolate_ray(f, r), f.values, rtol=0, atol=1e-15)


def test_interpolation_accuracy_smooth():
    r = geometric_radii(2.0, 1e-4, 64)
    g = lambda u: 1.2 * u**3 / (2 * (1 + u**3))  # noqa: E731
    f = RaySampling.from_function(g, 0.0, r)
    x = np.geomspace(2e-4, 1.9, 200)
    err = np.abs(interpolate_ray(f, x, order=7) - g(x)) / np.abs(g(x))
    assert err.max() < 1e-10


def test_interpolation_power_law_below_first_node():
    r = geometric_radii(1.0, 1e-2, 16)
    f = RaySampling.from_function(lambda u: u**3, 0.0, r)
    assert interpolate_ray(f, 1e-3) == pytest.approx(1e-9, rel=1e-9)
    assert interpolate_ray(f, 0.0) == 0


def test_interpolation_range_error():
    f = RaySampling.from_function(lambda u: u, 0.0, geometric_radii(1.0, 1e-2, 8))
    with pytest.raises(RangeError):
        interpolate_ray(f, 1.5)
    with pytest.raises(RangeError):
        interpolate_ray(f, -0.1)


def test_disc_from_rays():
    rays = [RaySampling.from_function(lambda u: u, d, geometric_radii(1.0, 1e-2, 4)) for d in (0.0, np.pi)]
    disc = DiscSampling.from_rays(0.5, rays)
    assert np.all(np.abs(disc.nodes) <= 0.5 + 1e-12)
    assert np.allclose(disc.values, disc.nodes)


def test_composite_legendre_polynomial():
    x, w = composite_legendre([0.0, 0.5, 2.0], 8)
    assert np.dot(w, x**5) == pytest.approx(2.0**6 / 6, rel=1e-13)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0, 2.5])
def test_jacobi_beta_integral(alpha):
    # int_0^1 (1-t)^(alpha-1) t^2 dt = B(3, alpha)
    exact = sp_gamma(3) * sp_gamma(alpha) / sp_gamma(3 + alpha)
    assert integrate_jacobi(lambda t: t**2, alpha).real == pytest.approx(exact, rel=1e-13)


def test_jacobi_endpoint_singularity_power():
    # int_0^1 (1-t)^(-1/2) t^(-1/2) dt = pi, handled by power = 2
    val = integrate_jacobi(lambda t: t**-0.5, 0.5, power=2)
    assert val.real == pytest.approx(math.pi, rel=1e-12)


def test_jacobi_domain():
    with pytest.raises(DomainError):
        integrate_jacobi(lambda t: t, 0.0)


def test_ratio_tail_geometric():
    terms = [(n, 0.5**n) for n in range(10)]
    assert ratio_tail(terms) == pytest.approx(0.5**10 / (1 - 0.5), rel=1e-12)


def test_ratio_tail_edge_cases():
    assert ratio_tail([(0, 1.0), (1, 0.0)]) == 0.0
    assert ratio_tail([(n, 2.0**n) for n in range(5)]) == float("inf")


@settings(max_examples=30)
@given(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False), min_size=2, max_size=5))
def test_interpolation_linear_in_values(c):
    r = geometric_radii(1.0, 1e-2, 16)
    base = [RaySampling.from_function(lambda u, j=j: u ** (j + 1), 0.0, r) for j in range(len(c))]
    combo = RaySampling(0.0, r, sum(ci * b.values for ci, b in zip(c, base)))
    x = np.geomspace(0.02, 0.9, 13)
    lhs = interpolate_ray(combo, x)
    rhs = sum(ci * interpolate_ray(b, x) for ci, b in zip(c, base))
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-14)
