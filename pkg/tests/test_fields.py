import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from cracktip.errors import DomainError, GridError
from cracktip.fields import (ISQ, RAD, STRAIGHT, ZERO, CrackParametrization, CrackedField,
                             PolarPoint, disk_energy, export_csv, from_log_polar, grad_polar,
                             isq, polar_laplacian, rad, read_csv_columns, rescale, to_log_polar)
from cracktip.numerics import CylinderGrid, Grid1D


class TestClosedForms:
    def test_values(self):
        assert rad(PolarPoint(1.0, 0.0)) == pytest.approx(np.sqrt(2 / np.pi))
        assert isq(PolarPoint(1.0, 0.0)) == 0.0
        assert isq(1.0, 2 * np.pi) == pytest.approx(0.0, abs=1e-16)
        assert rad(4.0, np.pi) == pytest.approx(0.0, abs=1e-15)

    def test_point_validation(self):
        with pytest.raises(DomainError):
            PolarPoint(0.0, 1.0)
        with pytest.raises(DomainError):
            PolarPoint(1.0, 7.0)

    def test_gradient_against_sympy(self):
        r, p = sp.symbols("r p", positive=True)
        for field, expr in ((RAD, sp.sqrt(2 * r / sp.pi) * sp.cos(p / 2)),
                            (ISQ, sp.sqrt(2 * r / sp.pi) * sp.sin(p / 2))):
            d_r = sp.lambdify((r, p), sp.diff(expr, r))
            d_t = sp.lambdify((r, p), sp.diff(expr, p) / r)
            for rr, pp in [(0.3, 0.4), (1.0, 3.0), (2.5, 6.0)]:
                got = field.grad(rr, pp)
                assert got[0] == pytest.approx(d_r(rr, pp), rel=1e-13)
                assert got[1] == pytest.approx(d_t(rr, pp), rel=1e-13, abs=1e-15)

    @given(r=st.floats(1e-3, 10), phi=st.floats(0, 2 * np.pi))
    @settings(max_examples=50, deadline=None)
    def test_energy_density(self, r, phi):
        assert RAD.grad_sq(r, phi) == pytest.approx(1 / (2 * np.pi * r), rel=1e-12)

    @given(r=st.floats(1e-3, 10), phi=st.floats(0, 2 * np.pi))
    @settings(max_examples=50, deadline=None)
    def test_conjugacy(self, r, phi):
        ux, uy = RAD.grad_cartesian(r, phi)
        wx, wy = ISQ.grad_cartesian(r, phi)
        assert abs(wx + uy) <= 1e-10 and abs(wy - ux) <= 1e-10

    def test_neumann_and_dirichlet_traces(self):
        assert grad_polar(RAD, PolarPoint(0.7, 0.0))[1] == 0.0
        assert abs(grad_polar("rad", PolarPoint(0.7, 2 * np.pi))[1]) < 1e-16
        assert abs(isq(0.7, 1e-12)) < 1e-12

    def test_harmonic(self):
        rg, pg = Grid1D(0.2, 1.0, 201), Grid1D(0.0, 2 * np.pi, 201)
        R, P = np.meshgrid(rg.nodes, pg.nodes, indexing="ij")
        for fn in (rad, isq):
            lap = polar_laplacian(fn(R, P), rg, pg)
            assert np.max(np.abs(lap)) < 1e-6


class TestDiskEnergy:
    @pytest.mark.parametrize("r", [0.1, 0.25, 0.5, 0.8, 1.0])
    def test_equality_case(self, r):
        assert disk_energy(RAD, r) / r == pytest.approx(1.0, abs=1e-8)

    def test_ratio(self):
        assert disk_energy(RAD, 1.0) / disk_energy(RAD, 0.5) == pytest.approx(2.0, rel=1e-10)

    def test_zero_field(self):
        assert disk_energy(ZERO, 0.5) == 0.0

    def test_invariant_under_crack_curving(self):
        # independent trapezoid quadrature of the chain-ruled gradient
        crack = CrackParametrization.linear(0.2)
        u = CrackedField.from_relative(RAD, crack)
        e = disk_energy(u.field, 0.5, crack=crack)
        s = np.linspace(0, np.sqrt(0.5), 401)[1:]
        psi = np.linspace(0, 2 * np.pi, 401)
        S, Psi = np.meshgrid(s, psi, indexing="ij")
        rho = S ** 2
        d_r, d_t = RAD.grad(rho, Psi)
        dens = (d_r - rho * 0.2 * d_t) ** 2 + d_t ** 2
        ref = trapezoid(trapezoid(dens * 2 * S ** 3, psi, axis=1), s)
        assert e == pytest.approx(ref, rel=1e-4)

    def test_bad_radius(self):
        with pytest.raises(DomainError):
            disk_energy(RAD, 1.5)


class TestRescale:
    @pytest.mark.parametrize("rho", [0.25, 0.1, 1e-3])
    def test_homogeneity(self, rho):
        u = rescale(RAD, None, rho)
        r, phi = np.linspace(0.1, 1, 7), np.linspace(0, 2 * np.pi, 7)
        np.testing.assert_allclose(u.field.value(r, phi), rad(r, phi), rtol=1e-13, atol=1e-15)

    def test_semigroup(self):
        crack = CrackParametrization.linear(0.3)
        once = rescale(RAD, crack, 0.02)
        twice = rescale(rescale(RAD, crack, 0.1), None, 0.2)
        r, phi = np.linspace(0.1, 1, 5), np.linspace(0.5, 5, 5)
        np.testing.assert_allclose(once.field.value(r, phi), twice.field.value(r, phi), rtol=1e-12)
        np.testing.assert_allclose(once.crack(r), twice.crack(r), rtol=1e-12)

    def test_linear_crack(self):
        u = rescale(RAD, CrackParametrization.linear(0.5), 0.2)
        assert u.crack(0.5) == pytest.approx(0.5 * 0.2 * 0.5)

    def test_range(self):
        with pytest.raises(DomainError):
            rescale(RAD, None, 0.5)


class TestLogPolar:
    def test_isq_profile_is_t_independent(self):
        cyl = CylinderGrid.make(0.1, 3.0, 65, 33)
        state = to_log_polar(ISQ, STRAIGHT, cyl)
        expected = np.sqrt(2 / np.pi) * np.sin(cyl.phi.nodes / 2)
        assert np.max(np.abs(state.f - expected[:, None])) < 1e-14

    def test_theta_of_linear_crack(self):
        cyl = CylinderGrid.make(0.1, 3.0, 65, 33)
        w = CrackedField.from_relative(ISQ, CrackParametrization.linear(0.1))
        state = to_log_polar(w, None, cyl)
        t = cyl.t.nodes
        np.testing.assert_allclose(state.theta(t), 0.1 * np.exp(-t), rtol=1e-14)
        assert np.max(np.abs(state.f[[0, -1]])) < 1e-14

    def test_rejects_nonzero_trace(self):
        with pytest.raises(DomainError):
            to_log_polar(RAD, STRAIGHT, CylinderGrid.make(0.1, 1.0, 33, 17))

    def test_round_trip(self):
        crack = CrackParametrization.linear(0.05)
        w = CrackedField.from_relative(ISQ, crack)
        state = to_log_polar(w, None, CylinderGrid.make(0.05, 3.0, 257, 257))
        back = from_log_polar(state)
        r, phi = np.array([0.2, 0.5, 0.8]), np.array([1.0, 3.0, 5.0])
        phi_abs = phi + crack(r)
        np.testing.assert_allclose(back.field.value(r, phi_abs), w.field.value(r, phi_abs), atol=1e-9)
        for a, b in zip(back.field.grad(r, phi_abs), w.field.grad(r, phi_abs)):
            np.testing.assert_allclose(a, b, atol=1e-7)

    def test_shape_validation(self):
        from cracktip.fields import LogPolarState
        cyl = CylinderGrid.make(0.1, 1.0, 33, 17)
        with pytest.raises(GridError):
            LogPolarState(cyl, lambda t: 0 * t, np.zeros((3, 3)))


def test_csv_round_trip(tmp_path):
    phi, t = np.linspace(0, 2 * np.pi, 5), np.linspace(0, 1, 3)
    vals = np.outer(np.sin(phi / 2), np.exp(-t))
    path = export_csv(tmp_path / "f.csv", phi, t, vals, "t")
    cols = read_csv_columns(path)
    assert list(cols) == ["phi", "t", "value"]
    np.testing.assert_array_equal(cols["value"], vals.ravel())
