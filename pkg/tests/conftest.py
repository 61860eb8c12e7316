import numpy as np
import pytest

from ckframe.core import ModuleOperator, ModuleVector
from ckframe.frames import FrameSystem


def cgauss(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def op(mat, d=1):
    return ModuleOperator(np.asarray(mat, dtype=complex), d)


def vec(flat):
    return ModuleVector(np.atleast_2d(np.asarray(flat, dtype=complex)))


def classical_frame(rows):
    """d = 1 frame from a list of coordinate rows."""
    return FrameSystem(np.asarray(rows, dtype=complex)[:, None, :])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def three_vectors():
    # {(1,0), (0,1), (1,1)}: Gram [[2,1],[1,2]]
    return classical_frame([[1, 0], [0, 1], [1, 1]])


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
