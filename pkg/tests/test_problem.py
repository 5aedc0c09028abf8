import dataclasses
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgevrey.errors import DomainError
from qgevrey.problem import (
    CauchyData,
    ProblemSpec,
    cauchy_to_physical,
    feasible_parameters,
    physical_coefficients,
    physical_to_cauchy,
    validate,
)

TERM = (2, 0, 0, 1)


def _with_term_delta(spec, delta):
    term = dataclasses.replace(spec.terms[0], delta=delta)
    return spec.with_(terms=(term,))


def test_toy1_hypotheses_pass(toy1):
    rep = validate(toy1.problem)
    assert rep.passed
    assert rep.slack("growth-i", TERM, 1) == pytest.approx(1.0)
    assert rep.slack("growth-iii", TERM) == pytest.approx(1.0)
    assert rep.slack("degree", TERM) == pytest.approx(3 - (2 + 2 * math.log(1.2)))
    assert rep.slack("degree", TERM) == pytest.approx(3 - 2.3646431, abs=1e-6)


def test_structural_condition_fails(toy1):
    rep = validate(_with_term_delta(toy1.problem, 1))
    assert not rep.passed
    assert [c.name for c in rep.failures()] == ["Delta_l>=l0"]
    assert rep.slack("Delta_l>=l0", TERM) == -1


def test_degree_condition_fails(toy1):
    rep = validate(toy1.problem.with_(P=(1, 0, 1)))
    assert [c.name for c in rep.failures()] == ["degree"]
    assert rep.slack("degree") == pytest.approx(2 - 2.3646431, abs=1e-6)


@given(st.integers(2, 12))
def test_structural_check_monotone_in_term_delta(delta):
    from qgevrey.config import builtin_config

    spec = builtin_config("toy1").problem
    a = validate(_with_term_delta(spec, delta))
    b = validate(_with_term_delta(spec, delta + 1))
    ok = lambda r: all(c.passed for c in r.checks if c.name == "Delta_l>=l0")  # noqa: E731
    assert not ok(a) or ok(b)


def test_report_json_shape(toy1):
    js = validate(toy1.problem).to_json()
    assert js["passed"] is True
    names = {c["check"] for c in js["checks"]}
    assert names == {"l2<S", "S>=l2+l3", "Delta_l>=l0", "growth-i", "growth-ii", "growth-iii", "degree"}


def test_feasible_parameters_include_spec_choice(toy1):
    pairs = feasible_parameters(toy1.problem)
    assert pairs
    for D, k1 in pairs:
        assert validate(toy1.problem, D, k1).passed


def test_spec_rejects_bad_input(toy1):
    spec = toy1.problem
    with pytest.raises(DomainError):
        spec.with_(q=1.0)
    with pytest.raises(DomainError):
        spec.with_(P=(3,))
    with pytest.raises(DomainError):
        spec.with_(P=(0, 1))
    with pytest.raises(DomainError):
        spec.with_(cauchy=CauchyData({1: {1: [1]}}))


def test_spec_json_roundtrip(toy1):
    spec = toy1.problem
    assert ProblemSpec.from_json(spec.to_json()) == spec


@pytest.mark.parametrize(
    "polys, k, eps, t, expected",
    [
        ({1: [1]}, 1, 0.1, 2.0, 0.2),
        ({2: [1]}, 2, 1.0, 0.5, 0.25),
        ({1: [1], 2: [1]}, 1, 1.0, 1.0, 2.0),
    ],
)
def test_cauchy_to_physical(polys, k, eps, t, expected):
    assert cauchy_to_physical(CauchyData({0: polys}), k, eps, t) == pytest.approx(expected)


def test_physical_to_cauchy_examples():
    assert physical_to_cauchy({0: [0, 1]}, 1).get(0) == {1: (1,)}
    assert physical_to_cauchy({0: [0, 0, 0, 2]}, 3).get(0) == {3: (2,)}
    with pytest.raises(DomainError):
        physical_to_cauchy({0: [1, 1]}, 1)


@given(
    st.dictionaries(st.integers(1, 6), st.floats(-5, 5).filter(lambda x: x != 0), min_size=1, max_size=4),
    st.sampled_from([1, 2, 3]),
)
def test_physical_cauchy_roundtrip(coeffs, k):
    data = CauchyData({0: {h: [c] for h, c in coeffs.items()}})
    back = physical_to_cauchy(physical_coefficients(data, k), k)
    for h, c in coeffs.items():
        assert back.get(0)[h][0] == pytest.approx(c, rel=1e-13)
