"""Deterministic oracles: special functions, closed forms, integral solver."""

import math

import numpy as np
import pytest
from scipy import integrate

from nonclassical_mc import (
    ConvergenceError,
    CrossSectionSpec,
    ModelKind,
    RadialGrid,
    RadialKernel,
    diffusion_point_source,
    exp_integral_E1,
    make_model,
    shell_average_from_function,
    solve_integral_equation,
    solve_sp3_constants,
    sp3_green_scalar,
)
from nonclassical_mc.reference import collision_matrix

ALL_KINDS = list(ModelKind)
EULER_GAMMA = 0.5772156649015329


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.uniform(12.0, 512)


class TestExpIntegral:
    def test_value_at_one(self):
        assert exp_integral_E1(1.0) == pytest.approx(0.219383934, abs=1e-9)

    @pytest.mark.parametrize("x", [0.05, 0.3, 1.0, 2.5, 7.0])
    def test_against_defining_integral(self, x):
        # independent oracle: quadrature of e^{-t}/t on [x, inf)
        oracle, err = integrate.quad(lambda t: math.exp(-t) / t, x, np.inf,
                                     limit=400, epsabs=1e-14, epsrel=1e-12)
        assert err < 1e-11
        assert exp_integral_E1(x) == pytest.approx(oracle, rel=1e-10)

    def test_small_x_series(self):
        x = 0.001
        series = -EULER_GAMMA - math.log(x) + x - x * x / 4.0
        assert exp_integral_E1(x) == pytest.approx(series, rel=1e-9)
        assert exp_integral_E1(x) == pytest.approx(6.33154, abs=1e-5)

    def test_large_x_asymptote(self):
        for x in (50.0, 200.0, 600.0):
            assert exp_integral_E1(x) * x * math.exp(x) == pytest.approx(1.0, rel=0.05)

    def test_domain_rejection(self):
        with pytest.raises(ValueError):
            exp_integral_E1(0.0)
        with pytest.raises(ValueError):
            exp_integral_E1(np.array([1.0, -2.0]))


class TestRadialKernel:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("u", [0.05, 0.5, 2.0])
    def test_profile_matches_quadrature(self, kind, u):
        # P(u) = integral_u^inf p(s)/s ds, checked against direct quadrature
        model = make_model(kind, CrossSectionSpec(1.3, 0.0))
        kernel = RadialKernel(model)
        oracle, err = integrate.quad(lambda s: model.density(s) / s, u, 80.0,
                                     limit=400, epsabs=1e-13, epsrel=1e-12)
        assert err < 1e-10
        assert kernel.profile(u) == pytest.approx(oracle, rel=1e-9)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_profile_integral_matches_quadrature(self, kind):
        model = make_model(kind, CrossSectionSpec(1.0, 0.0))
        kernel = RadialKernel(model)
        for x in (0.02, 0.4, 3.0):
            # from 0 so QUADPACK's extrapolation absorbs the classical
            # profile's logarithmic endpoint singularity
            oracle, _ = integrate.quad(lambda u: kernel.profile(u) if u > 0 else 0.0,
                                       0.0, x, limit=400, epsabs=1e-12, epsrel=1e-10)
            assert kernel.profile_integral(x) == pytest.approx(oracle, rel=1e-6)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_profile_total_mass(self, kind):
        # integral_0^inf P = integral p = 1 - atom
        model = make_model(kind, CrossSectionSpec(1.0, 0.0))
        kernel = RadialKernel(model)
        assert kernel.profile_integral(200.0) == pytest.approx(
            1.0 - model.atom_at_zero, abs=1e-10)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_profile_positive_decreasing(self, kind):
        kernel = RadialKernel(make_model(kind, CrossSectionSpec(1.0, 0.0)))
        u = np.linspace(1e-4, 20.0, 400)
        p = kernel.profile(u)
        assert np.all(p > 0.0)
        assert np.all(np.diff(p) < 0.0)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_point_kernel_normalization(self, kind):
        # 4 pi integral k(s) s^2 ds = 1 - atom
        model = make_model(kind, CrossSectionSpec(1.0, 0.0))
        kernel = RadialKernel(model)
        total, err = integrate.quad(
            lambda s: 4.0 * math.pi * s * s * kernel.point_kernel(s), 1e-14, 60.0,
            limit=400, epsabs=1e-12, epsrel=1e-12)
        assert total == pytest.approx(1.0 - model.atom_at_zero, abs=1e-8)


class TestClosedForms:
    def test_diffusion_point_source_value(self):
        xs = CrossSectionSpec(1.0, 0.0)  # c = 0, sigma_a = 1
        expected = 3.0 * math.exp(-math.sqrt(3.0)) / (4.0 * math.pi)
        assert diffusion_point_source(xs, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_diffusion_reduces_to_green_function_scale(self):
        # at c = 0 the decay constant is sqrt(3) sigma_t and the prefactor
        # 3 sigma_t^2: exactly 3 sigma_t^2 G(r) with G = e^{-sqrt3 st r}/4 pi r
        xs = CrossSectionSpec(2.0, 0.0)
        r = 0.7
        g = math.exp(-math.sqrt(3.0) * 2.0 * r) / (4.0 * math.pi * r)
        assert diffusion_point_source(xs, r) == pytest.approx(3.0 * 4.0 * g, rel=1e-12)

    def test_diffusion_volume_integral_is_balance(self):
        # integral f dV = sigma_t / sigma_a = Q / (1 - c)
        xs = CrossSectionSpec(1.0, 0.5)
        total, _ = integrate.quad(
            lambda r: 4.0 * math.pi * r * r * diffusion_point_source(xs, r),
            1e-12, 200.0, limit=400)
        assert total == pytest.approx(1.0 / (1.0 - xs.c), rel=1e-9)

    def test_diffusion_rejects_origin(self):
        with pytest.raises(ValueError):
            diffusion_point_source(CrossSectionSpec(1.0, 0.0), 0.0)

    def test_sp3_green_value(self):
        k = solve_sp3_constants()
        expected = (k.A_plus * math.exp(-k.lambda_plus)
                    + k.A_minus * math.exp(-k.lambda_minus)) / (4.0 * math.pi)
        assert sp3_green_scalar(CrossSectionSpec(1.0, 0.5), 1.0) == pytest.approx(
            expected, rel=1e-12)

    def test_sp3_green_dimensional_scaling(self):
        # G0 has units 1/length^2, so G0_sigma(r) = sigma^2 G0_1(sigma r)
        sigma = 2.0
        unit = CrossSectionSpec(1.0, 0.25)
        scaled = CrossSectionSpec(sigma, 0.5)
        for r in (0.3, 0.7, 2.0):
            assert sp3_green_scalar(scaled, r) == pytest.approx(
                sigma**2 * sp3_green_scalar(unit, sigma * r), rel=1e-12)

    def test_sp3_green_volume_integral(self):
        # each exponential term integrates to A/(sigma_t lambda^2), so the
        # total is 1/sigma_t by the normalization identity
        for st in (1.0, 2.0):
            xs = CrossSectionSpec(st, 0.0)
            total, _ = integrate.quad(
                lambda r: 4.0 * math.pi * r * r * sp3_green_scalar(xs, r),
                1e-12, 120.0 / st, limit=400)
            assert total == pytest.approx(1.0 / st, rel=1e-9)

    def test_sp3_green_rejects_origin(self):
        with pytest.raises(ValueError):
            sp3_green_scalar(CrossSectionSpec(1.0, 0.0), -1.0)

    def test_sp3_green_matches_pure_absorber_collision_density(self):
        # for c = 0 the collision density is p(r)/4 pi r^2 = sigma_t G0(r)
        xs = CrossSectionSpec(1.0, 0.0)
        model = make_model("sp3", xs)
        kernel = RadialKernel(model)
        r = np.array([0.2, 1.0, 3.0])
        np.testing.assert_allclose(kernel.point_kernel(r),
                                   sp3_green_scalar(xs, r), rtol=1e-12)


class TestRadialGrid:
    def test_uniform_constructor(self, grid):
        assert grid.nodes.size == 512
        assert grid.spacing == pytest.approx(12.0 / 512)
        assert grid.r_max == 12.0
        assert grid.weights[-1] == pytest.approx(grid.spacing / 2.0)

    def test_minimum_resolution_enforced(self):
        with pytest.raises(ValueError):
            RadialGrid.uniform(12.0, 128)

    def test_nonuniform_rejected(self):
        nodes = np.linspace(12.0 / 512, 12.0, 512).copy()
        nodes[100] *= 1.01
        with pytest.raises(ValueError):
            RadialGrid(nodes)


class TestSolver:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_pure_absorber_is_single_flight(self, kind, grid):
        xs = CrossSectionSpec(1.0, 0.0)
        model = make_model(kind, xs)
        solution = solve_integral_equation(model, xs, grid)
        np.testing.assert_array_equal(solution.f,
                                      RadialKernel(model).point_kernel(grid.nodes))
        assert solution.iterations == 0

    def test_diffusion_matches_closed_form(self, grid):
        xs = CrossSectionSpec(1.0, 0.5)
        model = make_model("diffusion", xs)
        solution = solve_integral_equation(model, xs, grid, tol=1e-10)
        window = (grid.nodes >= 0.5) & (grid.nodes <= 8.0)
        exact = diffusion_point_source(xs, grid.nodes[window])
        np.testing.assert_allclose(solution.f[window], exact, rtol=5e-3)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_volume_balance(self, kind, grid):
        xs = CrossSectionSpec(1.0, 0.5)
        model = make_model(kind, xs)
        solution = solve_integral_equation(model, xs, grid, tol=1e-10)
        assert solution.volume_integral() == pytest.approx(2.0, rel=5e-3)

    def test_neumann_series_consistency(self, grid):
        # the fixed point at c = 0.3 equals the explicitly summed first 30
        # Neumann terms of the same discrete operator
        xs = CrossSectionSpec(1.0, 0.3)
        model = make_model("diffusion", xs)
        solution = solve_integral_equation(model, xs, grid, tol=1e-12)
        kernel = RadialKernel(model)
        kmat = collision_matrix(kernel, grid)
        src = kernel.point_kernel(grid.nodes)
        term = src.copy()
        total = src.copy()
        c = xs.c
        for _ in range(30):
            term = c * (kmat @ term)
            total += term
        assert float(np.max(np.abs(total - solution.f))) < 1e-6

    def test_kernel_reciprocity(self, grid):
        # r k(r, r') r' is symmetric; in discrete form r_i K_ij / (w_j r_j)
        # is symmetric away from the half-weighted boundary node
        xs = CrossSectionSpec(1.0, 0.5)
        kernel = RadialKernel(make_model("sp3", xs))
        kmat = collision_matrix(kernel, grid)
        r = grid.nodes
        w = grid.weights
        sym = kmat * r[:, None] / (w[None, :] * r[None, :])
        interior = sym[:-1, :-1]
        np.testing.assert_allclose(interior, interior.T, rtol=1e-12, atol=1e-12)

    def test_sp2_fixed_point_with_atom(self, grid):
        # residual of f = c[(4/9) f + K_cont f] + first flight below tol,
        # with the origin mass feeding the volumetric source
        xs = CrossSectionSpec(1.0, 0.5)
        model = make_model("sp2", xs)
        solution = solve_integral_equation(model, xs, grid, tol=1e-10)
        c = xs.c
        assert solution.origin_mass == pytest.approx((4.0 / 9.0) / (1.0 - 4.0 * c / 9.0),
                                                     rel=1e-12)
        kernel = RadialKernel(model)
        kmat = collision_matrix(kernel, grid)
        src = (c * solution.origin_mass + 1.0) * kernel.point_kernel(grid.nodes)
        rhs = c * ((4.0 / 9.0) * solution.f + kmat @ solution.f) + src
        residual = np.max(np.abs(rhs - solution.f)) / np.max(np.abs(solution.f))
        assert residual < 1e-9

    def test_sp2_atom_weight_in_shell_averages(self, grid):
        xs = CrossSectionSpec(1.0, 0.5)
        model = make_model("sp2", xs)
        solution = solve_integral_equation(model, xs, grid, tol=1e-10)
        edges = np.linspace(0.0, 10.0, 65)
        with_mass = solution.shell_averages(edges)
        v0 = 4.0 * math.pi / 3.0 * edges[1] ** 3
        assert with_mass[0] > solution.origin_mass / v0  # origin mass credited

    def test_medium_mismatch_rejected(self, grid):
        model = make_model("diffusion", CrossSectionSpec(1.0, 0.5))
        with pytest.raises(ValueError):
            solve_integral_equation(model, CrossSectionSpec(1.0, 0.4), grid)

    def test_nonconvergence_reports_residual(self, grid, monkeypatch):
        # force a non-contractive operator so the iteration budget runs out
        xs = CrossSectionSpec(1.0, 0.5)
        model = make_model("diffusion", xs)
        m = grid.nodes.size
        monkeypatch.setattr("nonclassical_mc.reference.collision_matrix",
                            lambda kernel, g: -2.0 * np.eye(m))
        with pytest.raises(ConvergenceError) as excinfo:
            solve_integral_equation(model, xs, grid, tol=1e-10)
        assert excinfo.value.residual > 1e-10
        assert excinfo.value.iterations > 0

    def test_high_scattering_converges_within_budget(self, grid):
        # the +50 slack in the iteration budget holds up as c -> 1
        xs = CrossSectionSpec(1.0, 0.99)
        model = make_model("diffusion", xs)
        solution = solve_integral_equation(model, xs, grid, tol=1e-10)
        assert solution.residual < 1e-10
        assert np.all(solution.f > 0.0)


class TestShellAverages:
    def test_function_averages_match_analytic(self):
        # analytic shell integral of the diffusion closed form:
        # integral r e^{-kappa r} dr = [(1+kappa lo)e^{-kappa lo} -
        # (1+kappa hi)e^{-kappa hi}] / kappa^2
        xs = CrossSectionSpec(1.0, 0.5)
        kappa = math.sqrt(3.0 * xs.sigma_t * xs.sigma_a)
        edges = np.linspace(0.0, 10.0, 65)
        averages = shell_average_from_function(lambda r: diffusion_point_source(xs, r), edges)
        lo, hi = edges[:-1], edges[1:]
        radial = ((1.0 + kappa * lo) * np.exp(-kappa * lo)
                  - (1.0 + kappa * hi) * np.exp(-kappa * hi)) / kappa**2
        analytic = 3.0 * xs.sigma_t**2 / (4.0 * math.pi) * radial * 3.0 / (hi**3 - lo**3)
        np.testing.assert_allclose(averages, analytic, rtol=1e-9)

    def test_grid_averages_match_function_averages(self, grid):
        xs = CrossSectionSpec(1.0, 0.5)
        model = make_model("diffusion", xs)
        solution = solve_integral_equation(model, xs, grid, tol=1e-10)
        edges = np.linspace(0.0, 10.0, 65)
        from_grid = solution.shell_averages(edges)
        from_func = shell_average_from_function(
            lambda r: diffusion_point_source(xs, r), edges)
        np.testing.assert_allclose(from_grid, from_func, rtol=5e-3)

    def test_edges_beyond_grid_rejected(self, grid):
        xs = CrossSectionSpec(1.0, 0.0)
        model = make_model("diffusion", xs)
        solution = solve_integral_equation(model, xs, grid)
        with pytest.raises(ValueError):
            solution.shell_averages(np.linspace(0.0, 20.0, 11))
