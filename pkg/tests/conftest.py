import math

import pytest

from bipolar_scattering.config import SimulationConfig
from bipolar_scattering.dynamics import run

ACCEPTANCE_LINES: list[str] = []

V0 = 0.018
M = 2000.0


def barrier(E, w=1.0, **kw):
    return SimulationConfig(steps=(0.0, w), values=(0.0, V0, 0.0), E=E, x_L=-1.0, x_R=w + 1.0, **kw)


def upstep(E, V=0.009, **kw):
    return SimulationConfig(steps=(0.0,), values=(0.0, V), E=E, **kw)


def hard_wall(E=0.018, **kw):
    return SimulationConfig(steps=(0.0,), values=(0.0, math.inf), E=E, x_L=-2.0, x_R=0.5, **kw)


@pytest.fixture(scope="session")
def barrier_above():
    return run(barrier(2 * V0))


@pytest.fixture(scope="session")
def barrier_below():
    return run(barrier(V0 / 2, w=0.5))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
