"""Uniform grids, quadrature, finite differences and bisection.

Everything else in the package is built on these few primitives.  All
grids are uniform; integrals use composite Simpson weights (with a 3/8
panel closing an odd number of intervals) and derivatives use explicit
finite-difference stencils whose weights come from Fornberg's recursion,
centred in the interior and one-sided near the endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal

import numpy as np

from .errors import GridError, ParityError, RootFindingError

Parity = Literal["odd", "even", "none"]

MIN_NODES = 8
DEFAULT_NODES = 2049
PARITY_TOL = 1e-10
#: formal order of the finite-difference stencils used by default
FD_ACCURACY = 6


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with ``n`` nodes on ``[lo, hi]`` (both endpoints included)."""

    lo: float
    hi: float
    n: int = DEFAULT_NODES

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise GridError(f"grid needs at least {MIN_NODES} nodes, got {self.n}")
        if not self.hi > self.lo:
            raise GridError(f"empty interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def midpoint_index(self) -> int | None:
        """Index of the node at the centre of the interval, if there is one."""
        return (self.n - 1) // 2 if self.n % 2 == 1 else None

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.lo, self.hi, factor * (self.n - 1) + 1)

    def coarsened(self) -> "Grid1D":
        if (self.n - 1) % 2:
            raise GridError("only grids with an even number of intervals can be halved")
        return Grid1D(self.lo, self.hi, (self.n - 1) // 2 + 1)


def angular_grid(n: int = DEFAULT_NODES) -> Grid1D:
    """The grid on ``[0, 2*pi]`` used for functions of the angle."""
    return Grid1D(0.0, 2 * np.pi, n)


def check_parity(values: np.ndarray, parity: Parity, tol: float = PARITY_TOL,
                 scale: float | None = None) -> float:
    """Return the parity defect of ``values`` about the grid midpoint.

    The defect is relative to ``scale`` (default ``max |values|``).  Raises
    ParityError when it exceeds ``tol``.
    """
    if parity == "none":
        return 0.0
    mirrored = values[::-1]
    diff = values + mirrored if parity == "odd" else values - mirrored
    scale = np.max(np.abs(values)) if scale is None else scale
    defect = float(np.max(np.abs(diff)) / scale) if scale > 0 else 0.0
    if defect > tol:
        raise ParityError(f"sample is not {parity} about the midpoint (defect {defect:.3e})")
    return defect


@dataclass(frozen=True, eq=False)
class SampledFunction1D:
    """Real samples of a function on a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray
    parity: Parity = "none"
    parity_tol: float = field(default=PARITY_TOL, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise GridError(f"expected {self.grid.n} samples, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.parity not in ("odd", "even", "none"):
            raise ValueError(f"unknown parity {self.parity!r}")
        check_parity(values, self.parity, self.parity_tol)

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray], grid: Grid1D,
                      parity: Parity = "none") -> "SampledFunction1D":
        return cls(grid, np.broadcast_to(fn(grid.nodes), (grid.n,)), parity)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def _combine(self, other, op):
        if isinstance(other, SampledFunction1D):
            if other.grid != self.grid:
                raise GridError("samples live on different grids")
            parity = self.parity if self.parity == other.parity else "none"
            values = op(self.values, other.values)
            # parity of a combination is inherited; measure its defect against the operands
            scale = max(np.max(np.abs(self.values)), np.max(np.abs(other.values)))
            size = np.max(np.abs(values))
            tol = max(self.parity_tol, other.parity_tol) * (scale / size if size > 0 else 1.0)
            return SampledFunction1D(self.grid, values, parity, tol)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SampledFunction1D(self.grid, scalar * self.values, self.parity, self.parity_tol)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __neg__(self):
        return -1.0 * self


# --------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=64)
def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n`` equispaced nodes with spacing ``h``.

    For an odd number of intervals the last three intervals use the 3/8
    rule, which keeps the global error at O(h^4).
    """
    if n < 4:
        raise GridError("Simpson weights need at least 4 nodes")
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 3  # nodes covered by plain Simpson
    w[:m:2] += 2.0
    w[1:m:2] += 4.0
    w[0] -= 1.0
    w[m - 1] -= 1.0
    w[:m] *= h / 3.0
    if m < n:
        w[m - 1:] += np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 * h / 8.0
    w.setflags(write=False)
    return w


def integrate_samples(values: np.ndarray, grid: Grid1D, axis: int = -1) -> np.ndarray | float:
    """Simpson quadrature of samples along ``axis``."""
    values = np.asarray(values, dtype=float)
    if values.shape[axis] != grid.n:
        raise GridError("sample count does not match the grid")
    w = simpson_weights(grid.n, grid.h)
    return np.tensordot(np.moveaxis(values, axis, -1), w, axes=([-1], [0]))


def integrate(f: SampledFunction1D) -> float:
    """Integral of ``f`` over its grid (composite Simpson)."""
    return float(integrate_samples(f.values, f.grid))


@lru_cache(maxsize=32)
def _interval_weights(q: int, j: int) -> np.ndarray:
    # weights w such that sum_m w[m] p(m) = int_j^{j+1} p for every polynomial
    # p of degree < q sampled at 0..q-1 (unit spacing)
    x = np.arange(q) - (q - 1) / 2.0
    a, b = j - (q - 1) / 2.0, j + 1 - (q - 1) / 2.0
    k = np.arange(q)
    moments = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    vander = np.vander(x, q, increasing=True).T
    return np.linalg.solve(vander, moments)


def cumulative_integral(values: np.ndarray, grid: Grid1D, start: int = 0,
                        axis: int = -1, accuracy: int = FD_ACCURACY) -> np.ndarray:
    """Running integral ``F[i] = int_{x[start]}^{x[i]} f`` along ``axis``.

    Each interval is integrated exactly against the local interpolating
    polynomial through ``accuracy + 2`` neighbouring nodes, so the result
    is accurate to O(h^(accuracy+2)) per interval.
    """
    values = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = values.shape[-1]
    if n != grid.n:
        raise GridError("sample count does not match the grid")
    q = min(accuracy + 2, n)
    pieces = np.empty(values.shape[:-1] + (n - 1,))
    lo, hi = q // 2 - 1, n - q + q // 2 - 1  # intervals with a centred window
    windows = np.lib.stride_tricks.sliding_window_view(values, q, axis=-1)
    pieces[..., lo:hi + 1] = windows @ _interval_weights(q, lo)
    for i in [*range(lo), *range(hi + 1, n - 1)]:
        s0 = min(max(i - q // 2 + 1, 0), n - q)
        pieces[..., i] = values[..., s0:s0 + q] @ _interval_weights(q, i - s0)
    pieces *= grid.h
    out = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(pieces, axis=-1)], axis=-1)
    out -= out[..., start:start + 1]
    return np.moveaxis(out, -1, axis)


# --------------------------------------------------------------------------
# finite differences


def fornberg_weights(x0: float, xs: np.ndarray, order: int) -> np.ndarray:
    """Weights of the finite-difference formula for the ``order``-th derivative at ``x0``."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@lru_cache(maxsize=32)
def _stencils(n: int, order: int, accuracy: int):
    half = accuracy // 2
    centred = fornberg_weights(0.0, np.arange(-half, half + 1), order)
    width = accuracy + order
    if width > n:
        raise GridError(f"{n} nodes cannot support a width-{width} stencil")
    left = [fornberg_weights(float(i), np.arange(width), order) for i in range(half)]
    return half, centred, width, left


def differentiate_samples(values: np.ndarray, h: float, order: int = 1, axis: int = -1,
                          accuracy: int = FD_ACCURACY) -> np.ndarray:
    """Finite-difference derivative of ``values`` along ``axis``.

    Centred ``accuracy``-order stencils in the interior; one-sided stencils
    of the same formal order at the ``accuracy // 2`` nodes nearest each end.
    """
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    if accuracy % 2 or accuracy < 2:
        raise ValueError("accuracy must be a positive even integer")
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = v.shape[-1]
    half, centred, width, left = _stencils(n, order, accuracy)
    out = np.empty_like(v)
    interior = np.zeros(v.shape[:-1] + (n - 2 * half,))
    for k, c in enumerate(centred):
        interior += c * v[..., k:n - 2 * half + k]
    out[..., half:n - half] = interior
    sign = -1.0 if order == 1 else 1.0
    for i, w in enumerate(left):
        out[..., i] = v[..., :width] @ w
        out[..., n - 1 - i] = sign * (v[..., ::-1][..., :width] @ w)
    out /= h ** order
    return np.moveaxis(out, -1, axis)


_FLIP = {"odd": "even", "even": "odd", "none": "none"}


def differentiate(f: SampledFunction1D, order: int = 1,
                  accuracy: int = FD_ACCURACY) -> SampledFunction1D:
    """Derivative of a sample; the parity flips for ``order == 1``."""
    d = differentiate_samples(f.values, f.grid.h, order, accuracy=accuracy)
    parity = _FLIP[f.parity] if order == 1 else f.parity
    # FD stencils mirror exactly, so the parity survives up to rounding
    return SampledFunction1D(f.grid, d, parity, parity_tol=1e-6)


# --------------------------------------------------------------------------
# root finding


@dataclass(frozen=True)
class RootBracket:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise RootFindingError(f"bracket needs a < b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a


def find_root(F: Callable[[float], float], bracket: RootBracket, tol: float = 1e-13,
              max_iter: int = 400) -> float:
    """Bisection for a sign change of ``F`` inside ``bracket``.

    Stops once the bracket is no wider than ``tol`` and returns its midpoint.
    """
    if not tol > 0:
        raise RootFindingError(f"tolerance must be positive, got {tol}")
    a, b = float(bracket.a), float(bracket.b)
    fa, fb = F(a), F(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise RootFindingError(f"no sign change on [{a}, {b}]: F(a)={fa:.3e}, F(b)={fb:.3e}")
    for _ in range(max_iter):
        if b - a <= tol:
            return 0.5 * (a + b)
        m = 0.5 * (a + b)
        if m <= a or m >= b:  # bracket cannot shrink further in floating point
            return m
        fm = F(m)
        if fm == 0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    raise RootFindingError(f"bisection did not reach width {tol} in {max_iter} steps")


@dataclass(frozen=True)
class CylinderGrid:
    """Tensor grid on ``[0, 2*pi] x [t0, t1]``; arrays on it are indexed ``[phi, t]``."""

    phi: Grid1D
    t: Grid1D

    @classmethod
    def make(cls, t0: float, t1: float, n_phi: int = 513, n_t: int = 401) -> "CylinderGrid":
        return cls(angular_grid(n_phi), Grid1D(t0, t1, n_t))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.phi.n, self.t.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.phi.nodes, self.t.nodes, indexing="ij")
