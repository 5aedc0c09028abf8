import time

import qgevrey.laplace as laplace
from qgevrey.cli import main
from qgevrey.numerics import gamma_real
from qgevrey.selftest import identity_battery, run_selftest


def test_quick_selftest_passes_within_budget():
    t0 = time.perf_counter()
    rep = run_selftest(quick=True)
    assert time.perf_counter() - t0 <= 10
    assert rep["passed"] and rep["quick"]


def test_gamma_bug_is_caught(monkeypatch):
    monkeypatch.setattr(laplace, "gamma_real", lambda x: 1.01 * gamma_real(x))
    rep = identity_battery(draws=3)
    assert not rep["monomial"]["passed"]
    assert main(["selftest", "--quick"]) == 1


def test_selftest_deterministic():
    a, b = run_selftest(quick=True, seed=3), run_selftest(quick=True, seed=3)
    assert a == b
