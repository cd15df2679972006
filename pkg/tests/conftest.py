import numpy as np
import pytest

from knudsenkit.collision import CollisionModel
from knudsenkit.lattice import VelocityLattice


@pytest.fixture(scope="session")
def lattice():
    return VelocityLattice()


@pytest.fixture(scope="session")
def wide_lattice():
    # moment checks on shifted/heated states need a longer tail than [-6, 6]
    return VelocityLattice(counts=32, v_max=8.0)


@pytest.fixture(scope="session")
def bgk():
    return CollisionModel.bgk(2.0)


@pytest.fixture(scope="session")
def hard_sphere():
    return CollisionModel.hard_sphere()


@pytest.fixture(scope="session", params=["bgk-constant-nu", "bgk-matched-nu", "hard-sphere-linearized"])
def any_model(request):
    return CollisionModel(kind=request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULT_LINES

    if RESULT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULT_LINES):
            terminalreporter.write_line(line)
