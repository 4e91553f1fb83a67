import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cracktip.errors import GridError, ParityError, RootFindingError
from cracktip.numerics import (CylinderGrid, Grid1D, RootBracket, SampledFunction1D,
                               angular_grid, check_parity, cumulative_integral, differentiate,
                               differentiate_samples, find_root, fornberg_weights, integrate,
                               integrate_samples, simpson_weights)
from cracktip.spectrum import psi

QUADRATURE_TOL = 1e-10


@pytest.fixture(scope="module")
def grid():
    return angular_grid()


class TestGrid:
    def test_nodes_and_spacing(self):
        g = Grid1D(0.0, 1.0, 11)
        assert g.h == pytest.approx(0.1)
        assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0

    def test_rejects_small_or_empty(self):
        with pytest.raises(GridError):
            Grid1D(0.0, 1.0, 3)
        with pytest.raises(GridError):
            Grid1D(1.0, 1.0, 11)

    def test_midpoint_only_for_odd_counts(self):
        assert angular_grid(9).midpoint_index == 4
        assert angular_grid(10).midpoint_index is None

    def test_refine_coarsen_round_trip(self):
        g = angular_grid(65)
        assert g.refined().coarsened() == g
        with pytest.raises(GridError):
            angular_grid(64).coarsened()

    def test_cylinder_shape(self):
        c = CylinderGrid.make(0, 2, 33, 17)
        P, T = c.mesh()
        assert c.shape == P.shape == T.shape == (33, 17)


class TestQuadrature:
    def test_sin_squared_half_angle(self, grid):
        assert integrate_samples(np.sin(grid.nodes / 2) ** 2, grid) == pytest.approx(np.pi, abs=1e-12)

    def test_cross_term_integral(self, grid):
        x = grid.nodes
        val = integrate_samples(np.sin(x) ** 2 - (1 + np.cos(x)) ** 2, grid)
        assert val == pytest.approx(-2 * np.pi, abs=1e-12)

    def test_zero(self, grid):
        assert integrate_samples(np.zeros(grid.n), grid) == 0.0

    @pytest.mark.parametrize("n", [9, 10, 11, 12])
    def test_exact_on_cubics(self, n):
        g = Grid1D(-1.0, 2.0, n)
        x = g.nodes
        assert integrate_samples(x ** 3 - x, g) == pytest.approx((16 - 1) / 4 - (4 - 1) / 2, abs=1e-13)

    def test_fourth_order(self):
        errs = [abs(integrate_samples(np.exp(g.nodes), g) - (np.e - 1))
                for g in (Grid1D(0, 1, 17), Grid1D(0, 1, 33))]
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.05)

    def test_weights_sum_to_length(self):
        assert simpson_weights(12, 0.5).sum() == pytest.approx(5.5)

    def test_odd_function_integrates_to_zero(self, grid):
        f = SampledFunction1D.from_callable(lambda x: (x - np.pi) ** 3 * np.cos(x), grid, "odd")
        assert abs(integrate(f)) <= QUADRATURE_TOL

    @given(a=st.floats(-10, 10), b=st.floats(-10, 10))
    @settings(max_examples=25, deadline=None)
    def test_linearity(self, a, b):
        g = angular_grid(257)
        f, h = np.cos(g.nodes), g.nodes ** 2
        lhs = integrate_samples(a * f + b * h, g)
        rhs = a * integrate_samples(f, g) + b * integrate_samples(h, g)
        scale = max(1.0, integrate_samples(np.abs(f) + np.abs(h), g))
        assert abs(lhs - rhs) <= 1e-12 * (abs(a) + abs(b)) * scale

    def test_cumulative_matches_antiderivative(self):
        g = Grid1D(0, 2, 101)
        F = cumulative_integral(np.cos(g.nodes), g, start=50)
        assert np.max(np.abs(F - (np.sin(g.nodes) - np.sin(1.0)))) < 1e-12

    def test_cumulative_along_axis(self):
        g = Grid1D(0, 1, 41)
        vals = np.outer([1.0, 2.0], g.nodes)
        F = cumulative_integral(vals, g, axis=1)
        np.testing.assert_allclose(F[1], 2 * F[0], atol=1e-14)
        np.testing.assert_allclose(F[0], g.nodes ** 2 / 2, atol=1e-14)


class TestDifferences:
    def test_fornberg_central_second(self):
        np.testing.assert_allclose(fornberg_weights(0, np.array([-1, 0, 1]), 2), [1, -2, 1])

    def test_cos_half_first_derivative(self):
        errs = []
        for n in (129, 257):
            g = angular_grid(n)
            d = differentiate_samples(np.cos(g.nodes / 2), g.h, 1, accuracy=4)
            errs.append(np.max(np.abs(d + 0.5 * np.sin(g.nodes / 2))))
        assert errs[1] < errs[0] / 12  # O(h^4)

    def test_zeta0_second_derivative(self):
        # symbolic: d2/dphi2 (phi - pi) sin(phi/2) = cos(phi/2) - (phi - pi) sin(phi/2) / 4
        import sympy as sp
        x = sp.symbols("x")
        d2 = sp.lambdify(x, sp.diff((x - sp.pi) * sp.sin(x / 2), x, 2), "numpy")
        errs = []
        for n in (129, 257):
            g = angular_grid(n)
            d = differentiate_samples((g.nodes - np.pi) * np.sin(g.nodes / 2), g.h, 2, accuracy=2)
            errs.append(np.max(np.abs(d - d2(g.nodes))))
        assert errs[1] < errs[0] / 3  # O(h^2)

    def test_constant(self, grid):
        assert np.max(np.abs(differentiate_samples(np.full(grid.n, 3.0), grid.h, 1))) < 1e-9

    def test_twice_first_matches_second(self):
        g = angular_grid(513)
        f = np.sin(1.3 * g.nodes) * np.exp(0.2 * g.nodes)
        d11 = differentiate_samples(differentiate_samples(f, g.h, 1), g.h, 1)
        d2 = differentiate_samples(f, g.h, 2)
        assert np.max(np.abs(d11 - d2)) < 50 * g.h ** 2

    def test_parity_flips(self, grid):
        f = SampledFunction1D.from_callable(lambda x: np.cos(x / 2), grid, "odd")
        assert differentiate(f).parity == "even"

    def test_order_validation(self, grid):
        with pytest.raises(ValueError):
            differentiate_samples(np.zeros(grid.n), grid.h, 3)


class TestParity:
    def test_detects_even_sample(self, grid):
        with pytest.raises(ParityError):
            SampledFunction1D(grid, np.ones(grid.n), "odd")

    def test_two_dimensional_samples(self):
        g = angular_grid(33)
        vals = np.outer(np.cos(g.nodes / 2), [1.0, 2.0])
        assert check_parity(vals, "odd") < 1e-14

    def test_combination_inherits_parity(self, grid):
        f = SampledFunction1D.from_callable(lambda x: np.cos(x / 2), grid, "odd")
        assert (f + f).parity == "odd" and (f - 2 * f).parity == "odd"

    def test_grid_mismatch(self, grid):
        f = SampledFunction1D.from_callable(np.cos, grid)
        h = SampledFunction1D.from_callable(np.cos, angular_grid(33))
        with pytest.raises(GridError):
            f + h


class TestRoots:
    def test_sqrt2(self):
        assert find_root(lambda x: x * x - 2, RootBracket(1, 2), 1e-12) == pytest.approx(np.sqrt(2), abs=1e-12)

    def test_psi_root_interior(self):
        x = find_root(lambda x: float(psi(x)), RootBracket(1.5 * np.pi, 2 * np.pi))
        assert 1.5 * np.pi < x < 2 * np.pi

    def test_zero_at_centre(self):
        assert find_root(lambda x: x, RootBracket(-1, 1)) == 0.0

    def test_no_sign_change(self):
        with pytest.raises(RootFindingError):
            find_root(lambda x: x * x + 1, RootBracket(-1, 1))

    def test_bad_bracket(self):
        with pytest.raises(RootFindingError):
            RootBracket(2, 1)

    @given(root=st.floats(0.01, 0.99))
    @settings(max_examples=30, deadline=None)
    def test_within_tolerance(self, root):
        tol = 1e-10
        x = find_root(lambda x: x - root, RootBracket(0, 1), tol)
        assert abs(x - root) <= tol
