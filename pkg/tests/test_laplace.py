import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgevrey.errors import DirectionError, DomainError, PreconditionError, RangeError
from qgevrey.numerics import RaySampling, gamma_real, geometric_radii
from qgevrey.laplace import (
    check_convolution_identity,
    check_derivative_identity,
    check_dilation_identity,
    check_monomial_identity,
    conv_star,
    laplace_ray,
)


def test_laplace_of_u():
    assert laplace_ray(lambda u: u, 1, 0.0, 0.3) == pytest.approx(0.3, rel=1e-12)


def test_laplace_of_u2_order2():
    assert laplace_ray(lambda u: u**2, 2, 0.0, 0.5) == pytest.approx(0.25, rel=1e-12)


def test_laplace_off_axis_continuation():
    T = 0.3 * cmath.exp(1j * math.pi / 3)
    assert abs(laplace_ray(lambda u: u, 1, 0.0, T) - T) < 1e-10


def test_laplace_direction_error():
    with pytest.raises(DirectionError):
        laplace_ray(lambda u: u, 1, 0.0, -0.3)


def test_laplace_sampled_range_error():
    f = RaySampling.from_function(lambda u: u, 0.0, geometric_radii(0.5, 1e-3, 16))
    with pytest.raises(RangeError):
        laplace_ray(f, 1, 0.0, 0.3)


def test_laplace_sampled_matches_closed_form():
    f = RaySampling.from_function(lambda u: u**2, 0.0, geometric_radii(40.0, 1e-4, 48))
    assert laplace_ray(f, 1, 0.0, 0.3) == pytest.approx(gamma_real(2) * 0.09, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 1.7, 0.8 * cmath.exp(0.3j)])
@pytest.mark.parametrize("h, k", [(1, 1), (2, 1), (2, 2), (3, 3)])
def test_laplace_homogeneity(h, k, lam):
    T = 0.2
    a = laplace_ray(lambda u: u**h, k, float(np.angle(lam * T)), lam * T)
    b = laplace_ray(lambda u: u**h, k, 0.0, T)
    assert abs(a - lam**h * b) <= 1e-10 * abs(a)


@pytest.mark.parametrize("m, u, expected", [(1, 2.0, 4.0), (2, 1.0, 0.5)])
def test_conv_star_examples(m, u, expected):
    assert conv_star(m, lambda v: v, 1, u) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("m", [1, 2, 5])
def test_conv_star_zero(m):
    assert conv_star(m, lambda v: 0 * v, 2, 0.7) == 0


def test_conv_star_domain():
    with pytest.raises(DomainError):
        conv_star(0, lambda v: v, 1, 1.0)


@given(st.integers(1, 4), st.integers(1, 4), st.sampled_from([1, 2, 3]))
def test_conv_star_monomial_formula(m, h, k):
    u = 0.7 * cmath.exp(0.4j)
    exact = gamma_real(h / k) / gamma_real((m + h) / k) * u ** (m + h)
    assert abs(conv_star(m, lambda v: v**h, k, u) - exact) <= 1e-12 * abs(exact)


@pytest.mark.parametrize("h, k, T", [(1, 1, 0.2), (2, 2, 0.4), (3, 1, 0.1 * cmath.exp(1j * math.pi / 6))])
def test_monomial_identity(h, k, T):
    assert check_monomial_identity(h, k, T) <= 1e-7


@pytest.mark.parametrize("f, k", [(lambda u: u, 1), (lambda u: u**2, 2)])
def test_derivative_identity(f, k):
    assert check_derivative_identity(f, k, 0.3) <= 1e-5


def test_identities_vanish_on_zero():
    zero = lambda u: 0 * u  # noqa: E731
    assert check_derivative_identity(zero, 1, 0.3) == 0
    assert check_convolution_identity(2, zero, 1, 0.2) == 0


def test_dilation_identity():
    assert laplace_ray(lambda u: 1.2 * u, 1, 0.0, 0.1) == pytest.approx(0.12, rel=1e-12)
    assert check_dilation_identity(lambda u: u, 1, 1, 1.2, 0.1) <= 1e-6
    assert check_dilation_identity(lambda u: u**3, 1, 2, 1.2, 0.1) <= 1e-6


def test_dilation_precondition():
    with pytest.raises(PreconditionError):
        check_dilation_identity(lambda u: u, 1, 1, 1.2, 1.0)


@pytest.mark.parametrize("m", [1, 2])
def test_convolution_identity(m):
    assert check_convolution_identity(m, lambda u: u, 1, 0.2) <= 1e-5


@settings(max_examples=15, deadline=None)
@given(
    st.lists(st.floats(0.1, 2), min_size=1, max_size=4),
    st.sampled_from([1, 2, 3]),
    st.floats(0.05, 0.4),
    st.floats(-0.5, 0.5),
)
def test_identities_on_random_polynomials(coeffs, k, r, arg):
    f = lambda u: sum(c * u ** (j + 1) for j, c in enumerate(coeffs))  # noqa: E731
    T = r * cmath.exp(1j * arg / k)
    assert check_derivative_identity(f, k, T) <= 1e-5
    assert check_convolution_identity(1 + len(coeffs) % 2, f, k, T) <= 1e-5
