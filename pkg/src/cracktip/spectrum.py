"""Odd eigenfunctions of ``-d^2/dphi^2`` with the Ventsel boundary condition.

The odd space consists of functions on ``[0, 2 pi]`` antisymmetric about
``phi = pi``.  On it the indefinite form

    <u, v> = int u' v' - 1/4 int u v

is non-negative, degenerate exactly along ``cos(phi/2)``, and the operator
``A = (d^2/dphi^2)^-1`` (with the Ventsel condition at the slit) is
self-adjoint for it.  The eigenfunctions are ``sin(nu (phi - pi))`` with
``pi nu`` a positive zero of :func:`psi`; ``nu = 1/2`` degenerates into the
Jordan pair ``zeta1 = cos(phi/2)``, ``zeta0 = (phi - pi) sin(phi/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, GridError, ParityError, RootFindingError
from .numerics import (DEFAULT_NODES, FD_ACCURACY, Grid1D, RootBracket, SampledFunction1D,
                       angular_grid, check_parity, cumulative_integral, differentiate_samples,
                       find_root, integrate_samples)

NU_1 = 0.5
DEFAULT_K = 64
ROOT_TOL = 1e-13
RESOLVENT_PARITY_TOL = 1e-8
# h'(pi) (pi^2/8 - 1) = G'(0) + (pi/2)(G(0)/4 + G''(0))
_BC_FACTOR = np.pi ** 2 / 8 - 1


def psi(x):
    """``8x cos x - (pi^2 - 4x^2) sin x``; its positive zeros are ``pi * nu_k``."""
    x = np.asarray(x, dtype=float)
    return 8 * x * np.cos(x) - (np.pi ** 2 - 4 * x ** 2) * np.sin(x)


def phi_positive(x):
    """``e^x (pi^2 + x^2 - 4x) - pi^2 - x^2 - 4x``.

    Growing modes ``sinh(x (phi - pi) / pi)`` would need a positive zero;
    the function vanishes at 0 and increases, so there are none.
    """
    x = np.asarray(x, dtype=float)
    return np.exp(x) * (np.pi ** 2 + x ** 2 - 4 * x) - np.pi ** 2 - x ** 2 - 4 * x


def phi_positive_derivative(x):
    x = np.asarray(x, dtype=float)
    return np.exp(x) * (np.pi ** 2 + x ** 2 - 2 * x - 4) - 2 * x - 4


def eigen_bracket(k: int) -> RootBracket:
    """Bracket for ``pi * nu_k``; the sign change of Psi there is guaranteed."""
    if k < 2:
        raise DomainError(f"root brackets start at k = 2, got {k}")
    if k == 2:
        return RootBracket(1.5 * np.pi, 2 * np.pi)
    return RootBracket((k - 1) * np.pi, k * np.pi)


@lru_cache(maxsize=None)
def nu(k: int, tol: float = ROOT_TOL) -> float:
    """Eigenvalue ``nu_k`` (``nu_1 = 1/2`` exactly, bisection for ``k >= 2``)."""
    if k < 1:
        raise DomainError(f"eigenvalues are indexed from 1, got {k}")
    if k == 1:
        return NU_1
    try:
        x = find_root(lambda x: float(psi(x)), eigen_bracket(k), tol)
    except RootFindingError as exc:
        raise RootFindingError(f"no eigenvalue found for k = {k}: {exc}") from exc
    return x / np.pi


def nus(K: int = DEFAULT_K) -> np.ndarray:
    """``[nu_2, ..., nu_K]``."""
    return np.array([nu(k) for k in range(2, K + 1)])


# --------------------------------------------------------------------------
# bilinear form


@dataclass(frozen=True)
class BilinearFormContext:
    """Quadrature and differentiation settings for ``<u, v>`` on one grid."""

    grid: Grid1D
    accuracy: int = FD_ACCURACY

    def derivative(self, u: SampledFunction1D) -> np.ndarray:
        return differentiate_samples(u.values, self.grid.h, 1, accuracy=self.accuracy)

    def _check(self, *fs):
        for f in fs:
            if f.grid != self.grid:
                raise GridError("bilinear form needs samples on its own grid")

    def __call__(self, u: SampledFunction1D, v: SampledFunction1D) -> float:
        self._check(u, v)
        du = self.derivative(u)
        dv = du if v is u else self.derivative(v)
        return float(integrate_samples(du * dv - 0.25 * u.values * v.values, self.grid))

    def gram(self, fs: list[SampledFunction1D]) -> np.ndarray:
        self._check(*fs)
        vals = np.array([f.values for f in fs])
        ders = differentiate_samples(vals, self.grid.h, 1, axis=1, accuracy=self.accuracy)
        w = integrate_weights(self.grid)
        return (ders * w) @ ders.T - 0.25 * (vals * w) @ vals.T


@lru_cache(maxsize=16)
def _weights(grid: Grid1D) -> np.ndarray:
    w = integrate_samples(np.eye(grid.n), grid, axis=1)
    w.flags.writeable = False
    return w


def integrate_weights(grid: Grid1D) -> np.ndarray:
    return _weights(grid)


def bilinear(u: SampledFunction1D, v: SampledFunction1D) -> float:
    """``<u, v> = int u' v' - 1/4 int u v`` on the common grid of ``u`` and ``v``."""
    if u.grid != v.grid:
        raise GridError("bilinear form needs both samples on one grid")
    return BilinearFormContext(u.grid)(u, v)


# --------------------------------------------------------------------------
# eigenmodes


def _odd(grid: Grid1D, values: np.ndarray) -> SampledFunction1D:
    return SampledFunction1D(grid, values, parity="odd")


def zeta0(grid: Grid1D) -> SampledFunction1D:
    """``(phi - pi) sin(phi/2)``, the generalized eigenvector above ``zeta1``."""
    x = grid.nodes
    return _odd(grid, (x - np.pi) * np.sin(x / 2))


def zeta1(grid: Grid1D) -> SampledFunction1D:
    """``cos(phi/2)``, the null direction of the form."""
    return _odd(grid, np.cos(grid.nodes / 2))


def raw_mode(k: int, grid: Grid1D) -> SampledFunction1D:
    """Unnormalized ``sin(nu_k (phi - pi))``."""
    return _odd(grid, np.sin(nu(k) * (grid.nodes - np.pi)))


@lru_cache(maxsize=4096)
def normalization(k: int, grid: Grid1D) -> float:
    """``c_k > 0`` with ``<zeta_k, zeta_k> = 1`` under the discrete form of ``grid``."""
    if k < 2:
        raise DomainError(f"normalization constants exist for k >= 2, got {k}")
    g = raw_mode(k, grid)
    return 1.0 / np.sqrt(bilinear(g, g))


@dataclass(frozen=True)
class VentselMode:
    """One member of the basis: ``k = 0`` and ``k = 1`` are the Jordan pair."""

    k: int
    nu: float | None
    mu: float | None
    c: float | None
    profile: SampledFunction1D = field(repr=False)
    bracket: RootBracket | None = None

    @property
    def psi_residual(self) -> float:
        return float(psi(np.pi * self.nu)) if self.nu is not None else float("nan")


def basis_function(k: int, grid: Grid1D | None = None) -> SampledFunction1D:
    """``zeta_0``, ``zeta_1`` or the normalized ``zeta_k = c_k sin(nu_k (phi - pi))``."""
    grid = grid or angular_grid(DEFAULT_NODES)
    if k < 0:
        raise DomainError(f"basis index must be >= 0, got {k}")
    if k == 0:
        return zeta0(grid)
    if k == 1:
        return zeta1(grid)
    return raw_mode(k, grid) * normalization(k, grid)


def eigenvalue(k: int, grid: Grid1D | None = None, tol: float = ROOT_TOL) -> VentselMode:
    if k < 1:
        raise DomainError(f"eigenvalues are indexed from 1, got {k}")
    grid = grid or angular_grid(DEFAULT_NODES)
    if k == 1:
        return VentselMode(1, NU_1, 0.0, None, zeta1(grid))
    n = nu(k, tol)
    return VentselMode(k, n, n - 0.5, normalization(k, grid), basis_function(k, grid),
                       eigen_bracket(k))


def basis_matrix(K: int, grid: Grid1D) -> np.ndarray:
    """Rows ``zeta_2, ..., zeta_K`` sampled on ``grid``."""
    if K < 2:
        return np.zeros((0, grid.n))
    return np.array([basis_function(k, grid).values for k in range(2, K + 1)])


# --------------------------------------------------------------------------
# resolvent


def ventsel_bc(h: SampledFunction1D, accuracy: int = FD_ACCURACY) -> float:
    """``h'(0) + (pi/2)(h(0)/4 + h''(0))`` from one-sided differences."""
    d1 = differentiate_samples(h.values, h.grid.h, 1, accuracy=accuracy)
    d2 = differentiate_samples(h.values, h.grid.h, 2, accuracy=accuracy)
    return float(d1[0] + 0.5 * np.pi * (h.values[0] / 4 + d2[0]))


def resolvent(g: SampledFunction1D, parity_tol: float | None = None) -> SampledFunction1D:
    """The unique odd ``h`` with ``h'' = g`` and the Ventsel condition at the slit.

    ``G(phi) = int_pi^phi int_pi^tau g`` by running quadrature, then
    ``h = h'(pi) (phi - pi) + G`` with the slope fixed by the boundary
    condition.
    """
    grid = g.grid
    mid = grid.midpoint_index
    if mid is None:
        raise GridError("the resolvent needs pi as a grid node (odd node count)")
    tol = parity_tol if parity_tol is not None else g.parity_tol
    if g.parity != "odd":
        check_parity(g.values, "odd", tol)
    G1 = cumulative_integral(g.values, grid, start=mid)
    G = cumulative_integral(G1, grid, start=mid)
    slope = (G1[0] + 0.5 * np.pi * (G[0] / 4 + g.values[0])) / _BC_FACTOR
    h = slope * (grid.nodes - np.pi) + G
    return SampledFunction1D(grid, h, parity="odd", parity_tol=RESOLVENT_PARITY_TOL)


# --------------------------------------------------------------------------
# discrete Sobolev norms


def derivatives(u: SampledFunction1D, up_to: int, accuracy: int = FD_ACCURACY) -> list[np.ndarray]:
    """``[u, u', ..., u^(up_to)]`` by repeated first/second differences."""
    out = [np.asarray(u.values)]
    h = u.grid.h
    for j in range(1, up_to + 1):
        if j % 2 == 0:
            out.append(differentiate_samples(out[j - 2], h, 2, accuracy=accuracy))
        else:
            out.append(differentiate_samples(out[j - 1], h, 1, accuracy=accuracy))
    return out


def sobolev_norm(u: SampledFunction1D, order: int) -> float:
    """Discrete ``H^order`` norm, ``sqrt(sum_j int (u^(j))^2)``."""
    return float(np.sqrt(sum(integrate_samples(d ** 2, u.grid) for d in derivatives(u, order))))


def h1_norm(u: SampledFunction1D) -> float:
    return sobolev_norm(u, 1)


def h3_norm(u: SampledFunction1D) -> float:
    return sobolev_norm(u, 3)


def random_odd(rng: np.random.Generator, grid: Grid1D, n_terms: int = 6,
               decay: float = 1.0) -> SampledFunction1D:
    """Random odd sample ``sum_j a_j cos((2j+1) phi / 2)``; these cosines are odd about pi."""
    coeffs = rng.normal(size=n_terms) / (1.0 + np.arange(n_terms)) ** decay
    x = grid.nodes
    vals = sum(a * np.cos((2 * j + 1) * x / 2) for j, a in enumerate(coeffs))
    return _odd(grid, vals)
