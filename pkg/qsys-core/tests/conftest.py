import numpy as np
import pytest

from src.engine import bundled
from src.engine.completion import Completion, build_completion
from src.engine.linalg import Tolerance
from src.engine.qsystem import QSystem, trivial_qsystem
from src.engine.transport import qsys_ambient
from src.engine.twocat import OneCell, TwoCell
from src.services.loader_service import DATA_DIR


@pytest.fixture(scope="session")
def tol() -> Tolerance:
    return Tolerance(1e-9)


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def z2():
    return bundled.vec_z2()


@pytest.fixture(scope="session")
def triv(z2) -> QSystem:
    return trivial_qsystem(z2, bundled.POINT)


@pytest.fixture(scope="session")
def algebra(z2) -> QSystem:
    return bundled.group_algebra(z2)


@pytest.fixture(scope="session")
def z2_completion(triv, algebra, tol) -> Completion:
    """Completion of Vec_Z2 on the trivial Q-system and C[Z2]."""
    return build_completion([triv, algebra], tol, seed=0, name="QSys(Vec_Z2)")


@pytest.fixture(scope="session")
def z2_target(triv, algebra, tol) -> Completion:
    """Completion that also holds the image of C[Z2] under the twisted autoequivalence."""
    twisted = qsys_ambient(bundled.twisted_autoequivalence()).on_qsystem(algebra)
    return build_completion([triv, algebra, twisted], tol, seed=0, name="QSys(Vec_Z2)+twist")


def _random_endo(cell: OneCell, rng: np.random.Generator) -> TwoCell:
    blocks = {s: rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for s, n in cell.mult.items()}
    return TwoCell(cell, cell, blocks)


@pytest.fixture(scope="session")
def random_endo():
    return _random_endo
