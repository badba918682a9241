import numpy as np
import pytest

from kawasaki_gf.geometry import Torus
from kawasaki_gf.grid import DensityField, Grid
from kawasaki_gf.kernels import PairKernel

L = 10.0


@pytest.fixture
def torus1():
    return Torus(1, L)


@pytest.fixture
def grid256(torus1):
    return Grid(torus1, 256)


@pytest.fixture
def smooth_kernels():
    return PairKernel.gaussian(1.0, 0.5, L=L), PairKernel.gaussian(0.5, 0.5, L=L)


@pytest.fixture
def bump(grid256):
    return DensityField.gaussian_bump(grid256, 5.0, 1.0, 1.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, name, passed, detail)``; lines are echoed in the summary."""

    def record(number, name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name}  {detail}".rstrip()
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[key])
