import numpy as np
import pytest

from translimit import (
    CoefficientField,
    Grid1D,
    KernelSpec,
    ProblemSpec,
    build_angular_quadrature,
    build_sphere_quadrature,
)


@pytest.fixture(scope="session")
def quad8():
    return build_angular_quadrature(8)


@pytest.fixture(scope="session")
def quad16():
    return build_angular_quadrature(16)


@pytest.fixture(scope="session")
def sphere48():
    return build_sphere_quadrature(4, 8)


def make_problem(n_cells=100, sigma=1.0, gamma=1.0, source=1.0,
                 kernel=None, length=1.0, **kwargs):
    """Unit-slab problem with constant coefficients unless fields are given."""
    def field(v):
        return v if isinstance(v, CoefficientField) else CoefficientField.constant(v)

    return ProblemSpec(
        grid=Grid1D(length, n_cells),
        sigma=field(sigma),
        gamma=field(gamma),
        source=field(source),
        kernel=kernel if kernel is not None else KernelSpec(),
        **kwargs,
    )


@pytest.fixture
def unit_problem():
    return make_problem


def smooth_benchmark(n_cells=64):
    """The smooth heterogeneous benchmark used by the rate studies."""
    return make_problem(
        n_cells=n_cells,
        sigma=CoefficientField.sinusoid(1.0, 0.5, 1.0),
        gamma=1.0,
        source=1.0,
    )


def l2_error(a, b, grid, quad):
    d = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(grid.h * np.sum((d**2) @ quad.weights)))
