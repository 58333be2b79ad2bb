import pytest

from conesolve import (Dirichlet, EllipticCoefficients, Rectangle, UnitDisk,
                       assemble, build_grid)


@pytest.fixture(scope="session")
def disk_grid():
    return build_grid(UnitDisk(), 1.0 / 16.0)


@pytest.fixture(scope="session")
def disk_op(disk_grid):
    return assemble(disk_grid, EllipticCoefficients.laplacian(), Dirichlet())


@pytest.fixture(scope="session")
def square_grid():
    return build_grid(Rectangle(0.0, 1.0, 0.0, 1.0), 1.0 / 16.0)


@pytest.fixture(scope="session")
def square_op(square_grid):
    return assemble(square_grid, EllipticCoefficients.laplacian(),
                    Dirichlet())
