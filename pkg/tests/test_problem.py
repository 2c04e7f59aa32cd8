import numpy as np
import pytest

from translimit import (
    CoefficientField,
    Grid1D,
    KernelSpec,
    ManufacturedCase,
    ProblemSpec,
    ValidationError,
    assemble_scattering,
    cells_for_eps,
    kernel_isotropic,
    manufactured_case,
    mms_diffusion_source,
    mms_transport_source,
    scale,
)
from conftest import make_problem


class TestGrid:
    def test_basic_geometry(self):
        g = Grid1D(2.0, 8)
        assert g.h == 0.25
        np.testing.assert_allclose(g.centers[0], 0.125)
        np.testing.assert_allclose(g.edges[[0, -1]], [0.0, 2.0])
        assert g.centers.size == 8 and g.edges.size == 9

    def test_invalid(self):
        with pytest.raises(ValidationError):
            Grid1D(0.0, 8)
        with pytest.raises(ValidationError):
            Grid1D(1.0, 0)


class TestCoefficientField:
    def test_constant(self):
        f = CoefficientField.constant(2.5)
        np.testing.assert_allclose(f(np.linspace(0, 1, 11)), 2.5)
        assert f.bounds == (2.5, 2.5)

    def test_piecewise(self):
        f = CoefficientField.piecewise([0.5], [1.0, 4.0])
        x = np.array([0.1, 0.49, 0.51, 0.9])
        np.testing.assert_allclose(f(x), [1.0, 1.0, 4.0, 4.0])
        assert f.bounds == (1.0, 4.0)

    def test_sinusoid_and_derivative(self):
        f = CoefficientField.sinusoid(1.0, 0.5, 2.0, 0.3)
        x = np.linspace(0, 1, 7)
        h = 1e-6
        fd = (f(x + h) - f(x - h)) / (2 * h)
        np.testing.assert_allclose(f.derivative(x), fd, atol=1e-7)

    def test_bounds_hold_on_refined_sampling(self):
        fields = [
            CoefficientField.constant(3.0),
            CoefficientField.piecewise([0.3, 0.7], [1.0, 0.5, 2.0]),
            CoefficientField.sinusoid(1.0, 0.5, 3.0, 0.1),
        ]
        x = np.linspace(0.0, 1.0, 10 * 256 + 1)
        for f in fields:
            lo, hi = f.bounds
            v = f(x)
            assert np.all(v >= lo - 1e-12) and np.all(v <= hi + 1e-12)

    def test_piecewise_validation(self):
        with pytest.raises(ValidationError):
            CoefficientField.piecewise([0.5, 0.4], [1, 2, 3])
        with pytest.raises(ValidationError):
            CoefficientField.piecewise([0.5], [1.0])
        with pytest.raises(ValidationError):
            CoefficientField(kind="mystery")


class TestProblemValidation:
    def test_zero_gamma_rejected(self):
        with pytest.raises(ValidationError):
            make_problem(gamma=0.0)

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ValidationError):
            make_problem(sigma=CoefficientField.piecewise([0.5], [1.0, -1.0]))

    def test_unknown_scaling_rejected(self):
        with pytest.raises(ValidationError):
            make_problem(scaling="other")

    def test_kernel_spec_validation(self):
        with pytest.raises(ValidationError):
            KernelSpec(kind="weird")
        with pytest.raises(ValidationError):
            KernelSpec(kind="table")


class TestScale:
    def test_diffusive_values(self):
        p = make_problem(sigma=1.0)
        views = scale(p, 0.1)
        x = p.grid.centers
        np.testing.assert_allclose(views.sigma(x), 10.0)
        np.testing.assert_allclose(views.gamma(x), 0.1)
        np.testing.assert_allclose(views.f(x), 0.1)

    def test_eps_one_is_identity(self):
        p = make_problem(sigma=CoefficientField.sinusoid(2.0, 0.5, 1.0))
        views = scale(p, 1.0)
        x = p.grid.centers
        np.testing.assert_allclose(views.sigma(x), p.sigma(x))

    def test_multiplicative_composition(self):
        p = make_problem(sigma=CoefficientField.sinusoid(2.0, 0.5, 1.0))
        x = p.grid.centers
        e1, e2 = 0.5, 0.25
        once = scale(p, e1 * e2)
        twice_sigma = scale(p, e1).sigma(x) / e2
        twice_gamma = scale(p, e1).gamma(x) * e2
        np.testing.assert_allclose(once.sigma(x), twice_sigma, rtol=1e-14)
        np.testing.assert_allclose(once.gamma(x), twice_gamma, rtol=1e-14)

    def test_boundary_norm_scaling(self, quad8):
        # closed form: int_0^1 mu dmu / 2 = 1/4 per face, so |g|^2 = 1/2
        p = make_problem(g_left=1.0, g_right=1.0)
        eps = 0.25
        views = scale(p, eps)
        mu, w = quad8.nodes, quad8.weights
        pos = mu > 0
        gl = views.g_left(mu[pos])
        gr = views.g_right(mu[~pos])
        norm_sq = np.sum(w[pos] * mu[pos] * gl**2) + np.sum(
            w[~pos] * (-mu[~pos]) * gr**2
        )
        base_sq = np.sum(w[pos] * mu[pos]) + np.sum(w[~pos] * (-mu[~pos]))
        # quadrature value of the half-range closed form 1/4 per face
        assert abs(base_sq - 0.5) < 0.02
        # scaling of the discrete norm is exact: |g_eps| = eps |g|
        np.testing.assert_allclose(norm_sq, eps**2 * base_sq, rtol=1e-13)
        # sqrt(eps) bound holds with constant 0.5 relative to the data norm
        assert np.sqrt(norm_sq) <= 0.5 * np.sqrt(base_sq) * np.sqrt(eps) + 1e-15

    def test_invalid_eps(self):
        with pytest.raises(ValidationError):
            scale(make_problem(), 0.0)

    def test_unscaled_problem_rejected_by_scale(self):
        with pytest.raises(ValidationError):
            scale(make_problem(scaling="unscaled"), 0.5)


class TestManufacturedCases:
    @pytest.mark.parametrize("name", ["transport-poly", "transport-trig"])
    def test_transport_cases_satisfy_zero_inflow(self, name):
        case = manufactured_case(name, length=2.0)
        mu = np.linspace(-0.9, 0.9, 5)
        np.testing.assert_allclose(case.u(0.0, mu), 0.0, atol=1e-15)
        np.testing.assert_allclose(case.u(2.0, mu), 0.0, atol=1e-14)

    @pytest.mark.parametrize("name", ["diffusion-sin", "diffusion-parabola"])
    def test_diffusion_cases_vanish_at_ends(self, name):
        case = manufactured_case(name, length=1.5)
        assert abs(case.ubar(0.0)) < 1e-15
        assert abs(case.ubar(1.5)) < 1e-12

    def test_derivatives_match_finite_differences(self):
        case = manufactured_case("transport-trig")
        x = np.linspace(0.1, 0.9, 7)[:, None]
        mu = np.array([[-0.5, 0.7]])
        h = 1e-6
        fd = (case.u(x + h, mu) - case.u(x - h, mu)) / (2 * h)
        np.testing.assert_allclose(case.du_dx(x, mu), fd, atol=1e-8)

    def test_unknown_case(self):
        with pytest.raises(ValidationError):
            manufactured_case("nope")


class TestTransportSource:
    def test_poly_case_matches_hand_formula(self, quad8):
        # u = x(1-x)(1+mu), sigma = gamma = 1, isotropic scattering
        grid = Grid1D(1.0, 16)
        op = assemble_scattering(kernel_isotropic(), quad8)
        case = manufactured_case("transport-poly")
        f = mms_transport_source(case, CoefficientField.constant(1.0),
                                 CoefficientField.constant(1.0), op, grid)
        x = grid.centers[:, None]
        mu = quad8.nodes[None, :]
        expected = (mu * (1 - 2 * x) * (1 + mu)
                    + x * (1 - x) * (1 + mu)
                    - x * (1 - x) * (1.0 - (1.0 + mu)))
        np.testing.assert_allclose(f, expected, atol=1e-13)

    def test_velocity_independent_solution_drops_scattering(self, quad8):
        grid = Grid1D(1.0, 8)
        op = assemble_scattering(kernel_isotropic(), quad8)
        case = ManufacturedCase(
            name="flat-mu",
            u=lambda x, mu: np.sin(np.pi * x) * np.ones_like(mu),
            du_dx=lambda x, mu: np.pi * np.cos(np.pi * x) * np.ones_like(mu),
        )
        gamma = CoefficientField.constant(2.0)
        f = mms_transport_source(case, CoefficientField.constant(3.0), gamma, op, grid)
        x = grid.centers[:, None]
        mu = quad8.nodes[None, :]
        expected = mu * np.pi * np.cos(np.pi * x) + 2.0 * np.sin(np.pi * x)
        np.testing.assert_allclose(f, expected, atol=1e-13)

    def test_zero_solution_gives_zero_source(self, quad8):
        grid = Grid1D(1.0, 8)
        op = assemble_scattering(kernel_isotropic(), quad8)
        case = ManufacturedCase(
            name="zero",
            u=lambda x, mu: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(mu))),
            du_dx=lambda x, mu: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(mu))),
        )
        f = mms_transport_source(case, CoefficientField.constant(1.0),
                                 CoefficientField.constant(1.0), op, grid)
        np.testing.assert_allclose(f, 0.0, atol=1e-15)

    def test_continuous_residual_vanishes(self, quad16):
        # insert the manufactured solution into the continuous operator
        grid = Grid1D(1.0, 32)
        op = assemble_scattering(kernel_isotropic(), quad16)
        case = manufactured_case("transport-trig")
        sigma = CoefficientField.sinusoid(1.5, 0.25, 1.0)
        gamma = CoefficientField.constant(1.0)
        f = mms_transport_source(case, sigma, gamma, op, grid)
        x = grid.centers[:, None]
        mu = quad16.nodes[None, :]
        u = case.u(x, mu)
        ubar = (u @ quad16.weights)[:, None]
        residual = (mu * case.du_dx(x, mu) + gamma(grid.centers)[:, None] * u
                    - sigma(grid.centers)[:, None] * (ubar - u) - f)
        np.testing.assert_allclose(residual, 0.0, atol=1e-12)


class TestDiffusionSource:
    def test_sin_case_closed_form(self):
        case = manufactured_case("diffusion-sin")
        f = mms_diffusion_source(case, CoefficientField.constant(1.0),
                                 CoefficientField.constant(1.0))
        x = np.linspace(0.05, 0.95, 13)
        expected = (np.pi**2 / 3.0 + 1.0) * np.sin(np.pi * x)
        np.testing.assert_allclose(f(x), expected, atol=1e-12)

    def test_parabola_case(self):
        case = manufactured_case("diffusion-parabola")
        f = mms_diffusion_source(case, CoefficientField.constant(1.0),
                                 CoefficientField.constant(1.0))
        x = np.linspace(0.1, 0.9, 9)
        np.testing.assert_allclose(f(x), 2.0 / 3.0 + x * (1 - x), atol=1e-13)

    def test_variable_sigma_against_finite_differences(self):
        case = manufactured_case("diffusion-sin")
        sigma = CoefficientField.sinusoid(1.0, 0.4, 1.0)
        gamma = CoefficientField.constant(1.0)
        f = mms_diffusion_source(case, sigma, gamma)
        x = np.linspace(0.1, 0.9, 17)
        h = 1e-5
        a = lambda t: 1.0 / (3.0 * sigma(t))
        flux = lambda t: a(t) * case.dubar_dx(t)
        fd = -(flux(x + h) - flux(x - h)) / (2 * h) + gamma(x) * case.ubar(x)
        np.testing.assert_allclose(f(x), fd, rtol=1e-8, atol=1e-8)

    def test_requires_diffusion_case(self):
        with pytest.raises(ValidationError):
            mms_diffusion_source(manufactured_case("transport-poly"),
                                 CoefficientField.constant(1.0),
                                 CoefficientField.constant(1.0))


class TestMeshRule:
    def test_floor_and_rule(self):
        assert cells_for_eps(0.5, 1.0) == 64
        n = cells_for_eps(2.0**-6, 1.0)
        assert n >= 256 and n % 2 == 0
        assert 1.0 / n <= 2.0**-6 / 4.0
        assert cells_for_eps(0.5, 1.0, floor=32) == 32

    def test_invalid_eps(self):
        with pytest.raises(ValidationError):
            cells_for_eps(0.0, 1.0)
