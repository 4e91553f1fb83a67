"""The linear system for the pair ``(v, lambda)`` and its modal solutions.

On the cylinder ``[0, 2 pi] x [t0, t1]``

    v_t - v_tt = v/4 + v_phiphi + (lam' - lam'') isq_phi,
    v(0, t) = v(2 pi, t) = 0,
    lam' - lam'' = 2 sqrt(2/pi) v_phi(0, t),

with ``isq_phi = cos(phi/2) / sqrt(2 pi)``.  Writing
``zeta = v - lam isq_phi`` removes ``lam`` from the interior equation and
turns the last two lines into the Ventsel condition for ``zeta``.  Every
solution is then a sum of modes ``a_k(t) zeta_k(phi)`` with

    a_k = D e^((1/2 + nu_k) t) + C e^((1/2 - nu_k) t)           (k >= 2)
    a_0 = c1 + c2 e^t,   a_1 = c1 t - c2 t e^t + p + q e^t,

and ``lam = -sqrt(2 pi) zeta(0, t)`` because ``v`` vanishes on the crack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, GridError
from .expansion import expand_samples
from .numerics import (CylinderGrid, Grid1D, check_parity, differentiate_samples,
                       integrate_samples)
from .spectrum import basis_function, nu

SQRT_2PI = np.sqrt(2 * np.pi)
ODE_FACTOR = 2 * np.sqrt(2 / np.pi)
BOUNDARY_TOL = 1e-10
FD_TOL = 1e-6
DEFAULT_CYLINDER = dict(n_phi=513, n_t=401)


def isq_phi(phi):
    """Angular derivative of the conjugate tip field at ``r = 1``."""
    return np.cos(np.asarray(phi, dtype=float) / 2) / SQRT_2PI


# --------------------------------------------------------------------------
# coefficient ODEs


@dataclass(frozen=True)
class CoefficientSolution:
    """``a(t) = D e^((1/2 + nu) t) + C e^((1/2 - nu) t)``, a solution of ``a'' - a' = (nu^2 - 1/4) a``."""

    k: int
    C: float
    D: float = 0.0

    def __post_init__(self):
        if self.k < 2:
            raise DomainError(f"coefficient modes start at k = 2, got {self.k}")
        if not (np.isfinite(self.C) and np.isfinite(self.D)):
            raise DomainError("mode coefficients must be finite")

    @property
    def nu(self) -> float:
        return nu(self.k)

    @property
    def exponents(self) -> tuple[float, float]:
        """``(1/2 - nu, 1/2 + nu)``, the roots of ``x^2 - x - (nu^2 - 1/4)``."""
        return 0.5 - self.nu, 0.5 + self.nu

    @property
    def mu(self) -> float:
        return self.nu - 0.5

    def __call__(self, t, deriv: int = 0):
        t = np.asarray(t, dtype=float)
        lo, hi = self.exponents
        return self.C * lo ** deriv * np.exp(lo * t) + self.D * hi ** deriv * np.exp(hi * t)

    def ode_residual(self, t):
        return self(t, 2) - self(t, 1) - (self.nu ** 2 - 0.25) * self(t)


def coefficient_solution(k: int, C: float, D: float = 0.0) -> CoefficientSolution:
    return CoefficientSolution(k, C, D)


@dataclass(frozen=True)
class SlowBlock:
    """The ``(zeta_0, zeta_1)`` part: ``a_0 = c1 + c2 e^t``, ``a_1 = c1 t - c2 t e^t + p + q e^t``."""

    c1: float = 0.0
    c2: float = 0.0
    p: float = 0.0
    q: float = 0.0

    def a0(self, t, deriv: int = 0):
        t = np.asarray(t, dtype=float)
        return (self.c1 if deriv == 0 else 0.0) + self.c2 * np.exp(t)

    def a1(self, t, deriv: int = 0):
        t = np.asarray(t, dtype=float)
        e = np.exp(t)
        # d^j/dt^j (t e^t) = (t + j) e^t
        lin = self.c1 * (t if deriv == 0 else (1.0 if deriv == 1 else 0.0))
        return lin - self.c2 * (t + deriv) * e + (self.p if deriv == 0 else 0.0) + self.q * e

    @property
    def is_zero(self) -> bool:
        return self.c1 == self.c2 == self.p == self.q == 0.0


@dataclass(frozen=True)
class ModalSolution:
    """A finite modal solution; ``zeta = a_0 zeta_0 + a_1 zeta_1 + sum_k a_k zeta_k``."""

    modes: Mapping[int, tuple[float, float]] = field(default_factory=dict)
    block: SlowBlock = SlowBlock()

    def __post_init__(self):
        modes = {int(k): (float(C), float(D)) for k, (C, D) in dict(self.modes).items()}
        for k in modes:
            if k < 2:
                raise DomainError(f"mode indices start at 2, got {k}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "_solutions", [coefficient_solution(k, C, D)
                                                for k, (C, D) in sorted(modes.items())])

    @property
    def K(self) -> int:
        return max(self.modes, default=2)

    def coefficients(self, t, deriv: int = 0) -> np.ndarray:
        """``a_k^(deriv)(t)`` as an array ``[k = 0..K, t]``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((self.K + 1, t.size))
        out[0] = self.block.a0(t, deriv)
        out[1] = self.block.a1(t, deriv)
        for sol in self._solutions:
            out[sol.k] += sol(t, deriv)
        return out

    def crack_values(self, phi_grid: Grid1D) -> np.ndarray:
        """``zeta_k(0)`` for ``k = 0..K`` (``zeta_0(0) = 0``, ``zeta_1(0) = 1``)."""
        vals = np.zeros(self.K + 1)
        vals[1] = 1.0
        for k in self.modes:
            vals[k] = basis_function(k, phi_grid).values[0]
        return vals

    def profiles(self, phi_grid: Grid1D) -> np.ndarray:
        rows = np.zeros((self.K + 1, phi_grid.n))
        rows[0] = basis_function(0, phi_grid).values
        rows[1] = basis_function(1, phi_grid).values
        for k in self.modes:
            rows[k] = basis_function(k, phi_grid).values
        return rows

    def lam(self, t, phi_grid: Grid1D, deriv: int = 0) -> np.ndarray:
        return -SQRT_2PI * (self.crack_values(phi_grid) @ self.coefficients(t, deriv))

    def trajectory(self, grid: CylinderGrid) -> "LinearizedTrajectory":
        rows = self.profiles(grid.phi)
        t = grid.t.nodes
        z1 = rows[1]
        lam = [self.lam(t, grid.phi, j) for j in range(3)]
        v = [rows.T @ self.coefficients(t, j) + np.outer(z1, lam[j]) / SQRT_2PI for j in range(3)]
        return LinearizedTrajectory(grid, v[0], lam[0], lam[1], lam[2], v_t=v[1], v_tt=v[2],
                                    modal=self)


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class LinearizedTrajectory:
    """Samples ``v[phi, t]`` and ``lam[t]``; missing time derivatives fall back to differences."""

    grid: CylinderGrid
    v: np.ndarray
    lam: np.ndarray
    lam_dot: np.ndarray | None = None
    lam_ddot: np.ndarray | None = None
    v_t: np.ndarray | None = None
    v_tt: np.ndarray | None = None
    modal: ModalSolution | None = None
    boundary_tol: float = BOUNDARY_TOL
    parity_tol: float = 1e-8

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        if v.shape != self.grid.shape:
            raise GridError(f"v has shape {v.shape}, grid is {self.grid.shape}")
        if lam.shape != (self.grid.t.n,):
            raise GridError("lambda must have one sample per time node")
        if self.grid.phi.n < 9 or self.grid.t.n < 9:
            raise GridError("second derivatives need at least 9 nodes in each direction")
        scale = max(1.0, float(np.max(np.abs(v))), float(np.max(np.abs(lam))))
        trace = float(max(np.max(np.abs(v[0])), np.max(np.abs(v[-1]))))
        if trace > self.boundary_tol * scale:
            raise DomainError(f"v does not vanish on the crack (trace {trace:.3e})")
        check_parity(v, "odd", self.parity_tol, scale)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "lam", lam)
        ht = self.grid.t.h
        if self.lam_dot is None:
            object.__setattr__(self, "lam_dot", differentiate_samples(lam, ht, 1))
        if self.lam_ddot is None:
            object.__setattr__(self, "lam_ddot", differentiate_samples(lam, ht, 2))

    @property
    def derivative_source(self) -> str:
        return "analytic" if self.modal is not None else "finite-difference"

    @property
    def phi(self) -> np.ndarray:
        return self.grid.phi.nodes

    @property
    def t(self) -> np.ndarray:
        return self.grid.t.nodes

    @property
    def zeta(self) -> np.ndarray:
        """``v - lam isq_phi``."""
        return self.v - np.outer(isq_phi(self.phi), self.lam)

    def d_phi(self, values: np.ndarray, order: int) -> np.ndarray:
        return differentiate_samples(values, self.grid.phi.h, order, axis=0)

    def d_t(self, values: np.ndarray, order: int) -> np.ndarray:
        return differentiate_samples(values, self.grid.t.h, order, axis=1)

    def time_derivatives(self, analytic: bool = True) -> tuple[np.ndarray, np.ndarray]:
        if analytic and self.v_t is not None and self.v_tt is not None:
            return self.v_t, self.v_tt
        return self.d_t(self.v, 1), self.d_t(self.v, 2)

    def scaled(self, c: float) -> "LinearizedTrajectory":
        opt = lambda a: None if a is None else c * a
        modal = None
        if self.modal is not None:
            b = self.modal.block
            modal = ModalSolution({k: (c * C, c * D) for k, (C, D) in self.modal.modes.items()},
                                  SlowBlock(c * b.c1, c * b.c2, c * b.p, c * b.q))
        return LinearizedTrajectory(self.grid, c * self.v, c * self.lam, opt(self.lam_dot),
                                    opt(self.lam_ddot), opt(self.v_t), opt(self.v_tt), modal,
                                    self.boundary_tol, self.parity_tol)


@dataclass(frozen=True)
class LinearResiduals:
    pde: np.ndarray          # [phi, t]
    bc: np.ndarray           # [2, t]: traces at phi = 0 and 2 pi
    ode: np.ndarray          # [t]

    def max_abs(self, interior_only: bool = False) -> dict[str, float]:
        pde = self.pde[1:-1] if interior_only else self.pde
        return {"pde": float(np.max(np.abs(pde))), "bc": float(np.max(np.abs(self.bc))),
                "ode": float(np.max(np.abs(self.ode)))}


def lineare_residual(traj: LinearizedTrajectory, analytic_time: bool = False) -> LinearResiduals:
    """Residuals of the three equations, by finite differences on the grid.

    ``analytic_time`` swaps in stored time derivatives of ``v`` where
    available; ``lam`` derivatives are always the stored ones.
    """
    v = traj.v
    v_t, v_tt = traj.time_derivatives(analytic_time)
    v_pp = traj.d_phi(v, 2)
    forcing = np.outer(isq_phi(traj.phi), traj.lam_dot - traj.lam_ddot)
    pde = v_t - v_tt - v / 4 - v_pp - forcing
    bc = np.vstack([v[0], v[-1]])
    v_p0 = traj.d_phi(v, 1)[0]
    ode = traj.lam_dot - traj.lam_ddot - ODE_FACTOR * v_p0
    return LinearResiduals(pde, bc, ode)


@dataclass(frozen=True)
class VentselResiduals:
    pde: np.ndarray
    ventsel: np.ndarray

    def max_abs(self) -> dict[str, float]:
        return {"pde": float(np.max(np.abs(self.pde))), "ventsel": float(np.max(np.abs(self.ventsel)))}


def ventsel_residual(traj: LinearizedTrajectory) -> VentselResiduals:
    """``zeta_tt + zeta_phiphi + zeta/4 - zeta_t`` and the Ventsel condition at ``phi = 0``."""
    z = traj.zeta
    z_t, z_tt = traj.d_t(z, 1), traj.d_t(z, 2)
    z_p, z_pp = traj.d_phi(z, 1), traj.d_phi(z, 2)
    pde = z_tt + z_pp + z / 4 - z_t
    bc = z_p[0] + 0.5 * np.pi * (z[0] / 4 + z_pp[0])
    return VentselResiduals(pde, bc)


# --------------------------------------------------------------------------
# special solutions


def slow_mode(c1: float, c2: float, d: float, grid: CylinderGrid | None = None,
              t_range: tuple[float, float] = (0.0, 4.0)) -> LinearizedTrajectory:
    """``v = a_0(t) (phi - pi) sin(phi/2)`` with ``a_0 = c1 + c2 e^t`` and ``lam(0) = 0``.

    The matching multiplier is
    ``lam = -sqrt(2 pi) c1 t + sqrt(2 pi) c2 ((t - 1) e^t + 1) + d (e^t - 1)``;
    for ``c2 = 0`` this is ``-sqrt(2 pi) t a_0 + d (e^t - 1)``.
    """
    grid = grid or CylinderGrid.make(*t_range, **DEFAULT_CYLINDER)
    s = d / SQRT_2PI
    return ModalSolution({}, SlowBlock(c1, c2, s - c2, c2 - s)).trajectory(grid)


def slow_mode_lambda(c1: float, c2: float, d: float, t, deriv: int = 0) -> np.ndarray:
    """Closed form of the multiplier of :func:`slow_mode` (and its derivatives)."""
    t = np.asarray(t, dtype=float)
    e = np.exp(t)
    lin = -SQRT_2PI * c1 * (t if deriv == 0 else (1.0 if deriv == 1 else 0.0))
    # d^j/dt^j ((t - 1) e^t) = (t - 1 + j) e^t
    return lin + SQRT_2PI * c2 * ((t - 1 + deriv) * e + (1.0 if deriv == 0 else 0.0)) \
        + d * (e - (1.0 if deriv == 0 else 0.0))


def extra_condition_profile(traj: LinearizedTrajectory, analytic_time: bool = True) -> np.ndarray:
    """The integral condition evaluated at every time node."""
    phi = traj.phi[:, None]
    v = traj.v
    v_t, _ = traj.time_derivatives(analytic_time)
    v_p = traj.d_phi(v, 1)
    integrand = (v / 2 - v_t) * (np.cos(1.5 * phi) + np.cos(phi / 2)) \
        + v_p * (np.sin(1.5 * phi) + np.sin(phi / 2))
    return integrate_samples(integrand, traj.grid.phi, axis=0) + np.sqrt(np.pi / 2) * traj.lam_dot


def extra_condition(traj: LinearizedTrajectory, sigma: float, analytic_time: bool = True) -> float:
    """``int [(v/2 - v_t)(cos 3phi/2 + cos phi/2) + v_phi (sin 3phi/2 + sin phi/2)] + sqrt(pi/2) lam'``
    at ``t = sigma``; off-node times are read from a cubic spline in ``t``."""
    t = traj.t
    if not t[0] <= sigma <= t[-1]:
        raise DomainError(f"sigma = {sigma} outside [{t[0]}, {t[-1]}]")
    prof = extra_condition_profile(traj, analytic_time)
    hit = np.flatnonzero(np.isclose(t, sigma, rtol=0, atol=1e-12 * max(1.0, abs(sigma))))
    if hit.size:
        return float(prof[hit[0]])
    return float(CubicSpline(t, prof)(sigma))


def am_linearization(traj: LinearizedTrajectory, sigma: float, orientation: int = -1,
                     analytic_time: bool = True) -> float:
    """First-order part of the polar AM identity ``A - B`` at ``t = sigma``.

    ``B`` carries the weight ``1 + orientation * cos(phi)``.  With the crack
    point at angle 0 the weight produced by ``nu - nu(p)`` is ``1 - cos(phi)``
    (``orientation = -1``); ``orientation = +1`` reproduces
    ``-sqrt(2/pi) * extra_condition``.
    """
    if orientation not in (-1, 1):
        raise DomainError("orientation must be +1 or -1")
    t = traj.t
    if not t[0] <= sigma <= t[-1]:
        raise DomainError(f"sigma = {sigma} outside [{t[0]}, {t[-1]}]")
    phi = traj.phi[:, None]
    v_t, _ = traj.time_derivatives(analytic_time)
    v_p = traj.d_phi(traj.v, 1)
    radial = traj.lam_dot[None, :] * np.cos(phi / 2) / SQRT_2PI + traj.v / 2 - v_t
    a_part = (np.sin(phi / 2) * radial - np.cos(phi / 2) * v_p) * np.sin(phi)
    b_part = (np.sin(phi / 2) * v_p + np.cos(phi / 2) * radial) * (1 + orientation * np.cos(phi))
    prof = np.sqrt(2 / np.pi) * integrate_samples(a_part - b_part, traj.grid.phi, axis=0)
    return float(CubicSpline(t, prof)(sigma))


def crack_moment(traj: LinearizedTrajectory) -> np.ndarray:
    """``int v(phi, t) cos(phi/2) dphi``; ``am_linearization`` with ``orientation = -1``
    reduces to ``sqrt(2/pi) * crack_moment`` after one integration by parts."""
    return integrate_samples(traj.v * np.cos(traj.phi[:, None] / 2), traj.grid.phi, axis=0)


def translation_mode(grid: CylinderGrid | None = None) -> LinearizedTrajectory:
    """``v = 0, lam = e^t``: the first variation of translating the tip field across the crack."""
    grid = grid or CylinderGrid.make(0.0, 4.0, **DEFAULT_CYLINDER)
    return ModalSolution({}, SlowBlock(q=-1 / SQRT_2PI)).trajectory(grid)


def synthesize_decaying(coeffs: Mapping[int, float], lambda_inf: float = 0.0,
                        t_range: tuple[float, float] = (0.0, 4.0),
                        grid: CylinderGrid | None = None) -> LinearizedTrajectory:
    """``zeta = a1 cos(phi/2) + sum_k C_k e^(-mu_k t) zeta_k`` with ``a1 = -lambda_inf / sqrt(2 pi)``.

    Then ``lam = -sqrt(2 pi) zeta(0, t)`` tends to ``lambda_inf``.
    """
    grid = grid or CylinderGrid.make(*t_range, **DEFAULT_CYLINDER)
    a1 = -lambda_inf / SQRT_2PI
    modal = ModalSolution({k: (C, 0.0) for k, C in coeffs.items() if C != 0.0}, SlowBlock(p=a1))
    return modal.trajectory(grid)


def zero_trajectory(grid: CylinderGrid | None = None, lam: float = 0.0) -> LinearizedTrajectory:
    grid = grid or CylinderGrid.make(0.0, 4.0, **DEFAULT_CYLINDER)
    zeros = np.zeros(grid.t.n)
    return LinearizedTrajectory(grid, np.zeros(grid.shape), zeros + lam, zeros, zeros,
                                np.zeros(grid.shape), np.zeros(grid.shape))


# --------------------------------------------------------------------------
# decay


def decay_profile(traj: LinearizedTrajectory) -> np.ndarray:
    """``||v(., t)||_H2 + |lam'(t)| + |lam''(t)|`` at every time node."""
    v = traj.v
    v_p, v_pp = traj.d_phi(v, 1), traj.d_phi(v, 2)
    h2 = np.sqrt(integrate_samples(v ** 2 + v_p ** 2 + v_pp ** 2, traj.grid.phi, axis=0))
    return h2 + np.abs(traj.lam_dot) + np.abs(traj.lam_ddot)


def decay_rate(traj: LinearizedTrajectory, window: tuple[float, float] | None = None,
               zero_tol: float = 1e-280) -> float:
    """Least-squares slope of the log decay profile over ``window``."""
    t = traj.t
    lo, hi = window if window is not None else (t[0], t[-1])
    mask = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if mask.sum() < 2:
        raise DomainError(f"window {window} holds fewer than two time nodes")
    prof = decay_profile(traj)[mask]
    if np.any(prof <= zero_tol):
        raise DomainError("trajectory is numerically zero on the window")
    slope, _ = np.polyfit(t[mask], np.log(prof), 1)
    return float(slope)


def coefficients_of(traj: LinearizedTrajectory, K: int) -> np.ndarray:
    """``a_k(t)`` for ``k = 0..K`` by expanding ``zeta(., t)`` at every time node."""
    return expand_samples(traj.zeta, traj.grid.phi, K)


