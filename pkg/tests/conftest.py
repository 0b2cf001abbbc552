import numpy as np
import pytest

from dca import Disk, Rect, build_square_lattice, tikhomirov_lattice


@pytest.fixture
def unit_square():
    return build_square_lattice(Rect(0, 0, 1, 1), 1.0)


@pytest.fixture
def grid4():
    """4x4 cells on [-1,1]^2."""
    return build_square_lattice(Rect(-1, -1, 1, 1), 0.5)


@pytest.fixture
def disk_lattice():
    return build_square_lattice(Disk(0, 0, 1), 0.1)


@pytest.fixture
def tikhomirov():
    return tikhomirov_lattice(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
