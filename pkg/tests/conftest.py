import numpy as np
import pytest

from capdual import shapes
from capdual.discretize import triangulate

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def square():
    return shapes.unit_square()


@pytest.fixture(scope="session")
def disk():
    return shapes.disk()


@pytest.fixture(scope="session")
def lshape():
    return shapes.l_shape()


@pytest.fixture(scope="session")
def square_mesh(square):
    return triangulate(square, 0.05)


@pytest.fixture(scope="session")
def disk_mesh(disk):
    return triangulate(disk, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
