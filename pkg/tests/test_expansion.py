import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cracktip.errors import DomainError, GridError, ParityError
from cracktip.expansion import (ModeCoefficients, expand, expand_samples, h1_norm_sq,
                                nu_table, parity_split, random_coefficients, reconstruct,
                                reconstruct_samples)
from cracktip.fields import isq
from cracktip.numerics import SampledFunction1D, angular_grid, differentiate_samples
from cracktip.spectrum import basis_function, zeta0, zeta1

TOL = 1e-9


@pytest.fixture(scope="module")
def grid():
    return angular_grid()


def unit(K, k):
    out = np.zeros(K + 1)
    out[k] = 1.0
    return out


class TestBasisElements:
    @pytest.mark.parametrize("k", [0, 1, 2, 5, 16])
    def test_expand_basis_element(self, grid, k):
        c = expand(basis_function(k, grid), K=16)
        np.testing.assert_allclose(c.as_array(), unit(16, k), atol=TOL)
        assert c.truncation_error < 1e-10

    def test_zero(self, grid):
        z = reconstruct(ModeCoefficients.from_array(np.zeros(9)), grid)
        assert np.all(z.values == 0)


class TestRoundTrip:
    @given(seed=st.integers(0, 2 ** 32 - 1), K=st.sampled_from([2, 8, 32, 64]))
    @settings(max_examples=20, deadline=None)
    def test_expand_reconstruct(self, seed, K):
        g = angular_grid()
        c = random_coefficients(np.random.default_rng(seed), K)
        back = expand(reconstruct(c, g), K)
        np.testing.assert_allclose(back.as_array(), c.as_array(), atol=TOL)

    def test_columns_expand_together(self, grid):
        rng = np.random.default_rng(5)
        coeffs = rng.normal(size=(9, 4))
        vals = reconstruct_samples(coeffs, grid)
        np.testing.assert_allclose(expand_samples(vals, grid, 8), coeffs, atol=TOL)

    def test_truncation_error_decreases(self, grid):
        x = grid.nodes
        f = SampledFunction1D(grid, (x - np.pi) * np.sin(1.5 * x), "odd")
        errs = [expand(f, K).truncation_error for K in (4, 16, 64)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-5


class TestNorms:
    def test_norm_equivalence(self, grid):
        rng = np.random.default_rng(7)
        ratios = []
        for _ in range(20):
            c = random_coefficients(rng, 12)
            ratios.append(h1_norm_sq(reconstruct(c, grid)) / c.sum_squares())
        assert max(ratios) / min(ratios) < 10

    def test_zeta0_has_no_mode_content(self, grid):
        c = expand(zeta0(grid), 32)
        assert np.max(np.abs(c.a)) <= TOL


class TestParity:
    def test_isq_is_even(self, grid):
        even, odd = parity_split(isq(1.0, grid.nodes), grid)
        np.testing.assert_allclose(even, isq(1.0, grid.nodes), atol=1e-15)
        assert np.max(np.abs(odd)) < 1e-15

    def test_odd_part_of_zeta0(self, grid):
        even, odd = parity_split(zeta0(grid))
        np.testing.assert_allclose(odd.values, zeta0(grid).values, atol=1e-15)
        assert odd.parity == "odd" and even.parity == "even"

    def test_derivative_of_odd_is_even(self, grid):
        d = differentiate_samples(zeta1(grid).values, grid.h, 1)
        _, odd = parity_split(d, grid)
        assert np.max(np.abs(odd)) < 1e-9

    def test_even_input_rejected(self, grid):
        with pytest.raises(ParityError):
            expand_samples(np.ones(grid.n), grid, 4)

    def test_needs_grid(self):
        with pytest.raises(GridError):
            parity_split(np.zeros(9))


class TestCoefficients:
    def test_indexing(self):
        c = ModeCoefficients.from_array([1.0, 2.0, 3.0, 4.0])
        assert (c[0], c[1], c[2], c[3], c.K) == (1.0, 2.0, 3.0, 4.0, 3)
        with pytest.raises(IndexError):
            c[4]

    def test_validation(self):
        with pytest.raises(DomainError):
            ModeCoefficients(0.0, 0.0, [])
        with pytest.raises(DomainError):
            ModeCoefficients(np.nan, 0.0, [1.0])
        with pytest.raises(DomainError):
            expand_samples(np.zeros(angular_grid().n), angular_grid(), 1)

    def test_nu_table(self):
        t = nu_table(4)
        assert np.isnan(t[0]) and t[1] == 0.5 and 1.5 < t[2] < 2
