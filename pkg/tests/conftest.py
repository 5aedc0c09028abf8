import numpy as np
import pytest

from qgevrey.config import builtin_config
from qgevrey.solution import BorelCache


@pytest.fixture(scope="session")
def toy1():
    return builtin_config("toy1")


@pytest.fixture(scope="session")
def toy1_eps(toy1):
    return toy1.admissible("eps")


@pytest.fixture(scope="session")
def toy1_cache(toy1):
    return BorelCache(toy1.problem, toy1.solver_options())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def eps_run(tmp_path_factory, toy1):
    """Output directory holding the toy1 ``eps`` solve and both asym reports."""
    from qgevrey.pipeline import run_asym, run_solve

    out = tmp_path_factory.mktemp("eps-run")
    run_solve(toy1, out, variant="eps", N=None, eps_grid=None, t_grid=None)
    for norm in ("q-relative", "sup"):
        run_asym(toy1, out, variant="eps", norm_variant=norm, solve_inline=False)
    return out

