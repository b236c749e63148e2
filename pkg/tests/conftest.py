import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bliss.lti import make_instance  # noqa: E402
from bliss.solver import SolverConfig, oracle_rho0, reduce, solve  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def desk_instance():
    """n=20, m=5, T=500, s=1 Gaussian instance."""
    return make_instance(20, 5, 500, 1, "gaussian", seed=7)


@pytest.fixture(scope="session")
def small_instance():
    return make_instance(6, 2, 120, 1, "gaussian", seed=3)


def oracle_config(system, data, **kw):
    red = reduce(data, system.m, kw.get("oracle_A"))
    radius = kw.pop("radius", None)
    cfg = SolverConfig(radius=radius, rho0=oracle_rho0(red, system.B, data.U_true, radius), **kw)
    return cfg, red


@pytest.fixture(scope="session")
def desk_solution(desk_instance):
    system, data = desk_instance
    cfg, red = oracle_config(system, data)
    return cfg, red, solve(data, system.m, cfg, red=red)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
