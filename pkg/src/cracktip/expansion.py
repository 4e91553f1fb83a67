"""Expansion of odd functions in the basis ``zeta_0, zeta_1, zeta_2, ...``.

The basis is orthonormal for ``<., .>`` from ``k = 2`` on, ``zeta_0`` is
orthogonal to all of those, and ``zeta_1`` is invisible to the form.  So
``a_0`` and ``a_k`` come from the form, and ``a_1`` from the plain L^2
projection of what is left onto ``cos(phi/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, GridError, ParityError
from .numerics import (DEFAULT_NODES, FD_ACCURACY, Grid1D, SampledFunction1D, angular_grid,
                       check_parity, differentiate_samples, integrate_samples)
from .spectrum import DEFAULT_K, basis_function, integrate_weights, nu


@dataclass(frozen=True)
class ModeCoefficients:
    a0: float
    a1: float
    a: np.ndarray  # a[k - 2] for k = 2..K
    truncation_error: float = float("nan")

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        if a.size < 1:
            raise DomainError("need at least the k = 2 coefficient")
        if not (np.isfinite(self.a0) and np.isfinite(self.a1) and np.all(np.isfinite(a))):
            raise DomainError("coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def K(self) -> int:
        return self.a.size + 1

    def __getitem__(self, k: int) -> float:
        if k == 0:
            return self.a0
        if k == 1:
            return self.a1
        if 2 <= k <= self.K:
            return float(self.a[k - 2])
        raise IndexError(k)

    def as_array(self) -> np.ndarray:
        """``[a_0, a_1, a_2, ..., a_K]``."""
        return np.concatenate([[self.a0, self.a1], self.a])

    @classmethod
    def from_array(cls, values) -> "ModeCoefficients":
        values = np.asarray(values, dtype=float)
        return cls(values[0], values[1], values[2:])

    def sum_squares(self) -> float:
        return float(np.sum(self.as_array() ** 2))


@dataclass(frozen=True, eq=False)
class _Basis:
    grid: Grid1D
    K: int
    rows: np.ndarray       # zeta_0, zeta_2, ..., zeta_K
    d_rows: np.ndarray
    system: np.ndarray
    zeta1: np.ndarray


@lru_cache(maxsize=32)
def _basis(K: int, grid: Grid1D) -> _Basis:
    rows = np.array([basis_function(k, grid).values for k in [0, *range(2, K + 1)]])
    d_rows = differentiate_samples(rows, grid.h, 1, axis=1, accuracy=FD_ACCURACY)
    w = integrate_weights(grid)
    z1 = np.cos(grid.nodes / 2)
    d_z1 = differentiate_samples(z1, grid.h, 1, accuracy=FD_ACCURACY)
    # unknowns [a_0, a_2..a_K, a_1]; rows: <f, zeta_j> for j = 0, 2..K, then (1/pi) int f zeta_1
    system = np.empty((K + 1, K + 1))
    system[:K, :K] = (d_rows * w) @ d_rows.T - 0.25 * (rows * w) @ rows.T
    system[:K, K] = (d_rows * w) @ d_z1 - 0.25 * (rows * w) @ z1
    system[K, :K] = (rows * w) @ z1 / np.pi
    system[K, K] = w @ (z1 * z1) / np.pi
    return _Basis(grid, K, rows, d_rows, system, z1)


def _check_odd(values: np.ndarray, tol: float):
    try:
        check_parity(values, "odd", tol)
    except ParityError as exc:
        raise ParityError(f"only odd functions can be expanded: {exc}") from exc


def projections(values: np.ndarray, grid: Grid1D, K: int = DEFAULT_K) -> np.ndarray:
    """Raw form values ``<f, zeta_j>`` for ``j = 0, 2, ..., K``; ``values`` indexed ``[phi, ...]``."""
    b = _basis(K, grid)
    v = np.asarray(values, dtype=float)
    dv = differentiate_samples(v, grid.h, 1, axis=0, accuracy=FD_ACCURACY)
    w = integrate_weights(grid)
    return (b.d_rows * w) @ dv - 0.25 * (b.rows * w) @ v


def expand_samples(values: np.ndarray, grid: Grid1D, K: int = DEFAULT_K,
                   parity_tol: float = 1e-8) -> np.ndarray:
    """Coefficients ``[a_0, a_1, ..., a_K]`` for each column of ``values[phi, ...]``.

    ``a_0, a_k`` solve the discrete Gram system of the form and ``a_1`` the
    projection of the remainder onto ``cos(phi/2)``, all in one linear
    solve.  The Gram matrix is the identity (``pi`` for ``zeta_0``) up to
    discretization error, so this is ``a_k = <f, zeta_k>`` corrected to
    keep the round trip exact on the span at every ``K``.
    """
    if K < 2:
        raise DomainError(f"need K >= 2, got {K}")
    v = np.asarray(values, dtype=float)
    if v.shape[0] != grid.n:
        raise GridError("first axis must run over the angular grid")
    _check_odd(v, parity_tol)  # reverses the phi axis, so columns are checked together
    b = _basis(K, grid)
    l1 = integrate_samples(v * b.zeta1.reshape((-1,) + (1,) * (v.ndim - 1)), grid, axis=0) / np.pi
    rhs = np.concatenate([projections(v, grid, K), np.asarray(l1)[None, ...]], axis=0)
    c = np.linalg.solve(b.system, rhs)
    return np.concatenate([c[:1], c[-1:], c[1:-1]], axis=0)


def expand(zeta: SampledFunction1D, K: int = DEFAULT_K, with_error: bool = True) -> ModeCoefficients:
    """Expand an odd sample; ``truncation_error`` is the discrete H^1 norm of the remainder."""
    arr = expand_samples(zeta.values, zeta.grid, K, max(zeta.parity_tol, 1e-8))
    err = float("nan")
    if with_error:
        rest = zeta.values - reconstruct_samples(arr, zeta.grid)
        err = _h1(rest, zeta.grid)
    return ModeCoefficients(arr[0], arr[1], arr[2:], err)


def reconstruct_samples(coeffs: np.ndarray, grid: Grid1D) -> np.ndarray:
    """``sum_k a_k zeta_k`` for each column of ``coeffs[k, ...]``."""
    coeffs = np.asarray(coeffs, dtype=float)
    K = coeffs.shape[0] - 1
    b = _basis(max(K, 2), grid)
    rows = b.rows if K >= 2 else b.rows[:1]
    main = np.concatenate([coeffs[:1], coeffs[2:]], axis=0)
    out = np.tensordot(rows.T, main, axes=(1, 0))
    return out + np.multiply.outer(b.zeta1, coeffs[1])


def reconstruct(c: ModeCoefficients, grid: Grid1D | None = None) -> SampledFunction1D:
    grid = grid or angular_grid(DEFAULT_NODES)
    return SampledFunction1D(grid, reconstruct_samples(c.as_array(), grid), parity="odd",
                             parity_tol=1e-8)


def _h1(values: np.ndarray, grid: Grid1D) -> float:
    d = differentiate_samples(values, grid.h, 1, accuracy=FD_ACCURACY)
    return float(np.sqrt(integrate_samples(values ** 2 + d ** 2, grid)))


def h1_norm_sq(zeta: SampledFunction1D) -> float:
    return _h1(zeta.values, zeta.grid) ** 2


def parity_split(h: np.ndarray | SampledFunction1D, grid: Grid1D | None = None):
    """``(even, odd)`` parts about ``phi = pi`` of samples indexed ``[phi, ...]``.

    ``h(2 pi - phi)`` is the reversed first axis, so the split is exact.
    """
    if isinstance(h, SampledFunction1D):
        even, odd = parity_split(h.values, h.grid)
        return (SampledFunction1D(h.grid, even, "even"), SampledFunction1D(h.grid, odd, "odd"))
    if grid is None:
        raise GridError("parity_split of raw samples needs the angular grid")
    if not (np.isclose(grid.lo, 0.0) and np.isclose(grid.hi, 2 * np.pi)):
        raise GridError("parity about pi needs an angular grid over [0, 2 pi]")
    h = np.asarray(h, dtype=float)
    if h.shape[0] != grid.n:
        raise GridError("first axis must run over the angular grid")
    mirrored = h[::-1]
    return 0.5 * (h + mirrored), 0.5 * (h - mirrored)


def random_coefficients(rng: np.random.Generator, K: int, scale: float = 1.0) -> ModeCoefficients:
    return ModeCoefficients.from_array(scale * rng.normal(size=K + 1))


def nu_table(K: int) -> np.ndarray:
    """``[nan, 1/2, nu_2, ..., nu_K]`` aligned with coefficient arrays."""
    return np.array([np.nan] + [nu(k) for k in range(1, K + 1)])
