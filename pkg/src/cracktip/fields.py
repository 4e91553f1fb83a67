"""The explicit crack-tip fields and the coordinate changes around the tip.

Angles follow the chart of the crack: for a crack ``{s (cos a(s), sin a(s))}``
the point at radius ``r`` is described by an absolute polar angle in
``[a(r), a(r) + 2 pi]``, both ends of the interval lying on the crack.  For
the straight crack ``a == 0`` this is the familiar ``phi in [0, 2 pi]``,
and the square-root branch cut of ``rad``/``isq`` sits on the crack.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import DomainError, GridError
from .numerics import (CylinderGrid, Grid1D, differentiate_samples, fornberg_weights,
                       integrate_samples)

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class PolarPoint:
    r: float
    phi: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"radius must be positive, got {self.r}")
        if not 0.0 <= self.phi <= 2 * np.pi:
            raise DomainError(f"angle must lie in [0, 2pi], got {self.phi}")


def _unpack(r, phi):
    if phi is None:
        if not isinstance(r, PolarPoint):
            raise TypeError("pass a PolarPoint or both r and phi")
        return r.r, r.phi
    return np.asarray(r, dtype=float), np.asarray(phi, dtype=float)


def rad(r, phi=None):
    """``sqrt(2 r / pi) cos(phi / 2)``; accepts a PolarPoint or arrays."""
    r, phi = _unpack(r, phi)
    return np.sqrt(2.0 * r / np.pi) * np.cos(phi / 2.0)


def isq(r, phi=None):
    """``sqrt(2 r / pi) sin(phi / 2)``, the harmonic conjugate of :func:`rad`."""
    r, phi = _unpack(r, phi)
    return np.sqrt(2.0 * r / np.pi) * np.sin(phi / 2.0)


def _rad_grad(r, phi):
    s = 1.0 / np.sqrt(2.0 * np.pi * r)
    return s * np.cos(phi / 2.0), -s * np.sin(phi / 2.0)


def _isq_grad(r, phi):
    s = 1.0 / np.sqrt(2.0 * np.pi * r)
    return s * np.sin(phi / 2.0), s * np.cos(phi / 2.0)


@dataclass(frozen=True)
class PolarField:
    """A scalar field with its gradient, both in polar coordinates.

    ``grad(r, phi)`` returns ``(d/dr, (1/r) d/dphi)`` at fixed angle; the
    angle is absolute and must lie in the crack chart.
    """

    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

    def __call__(self, r, phi=None):
        r, phi = _unpack(r, phi)
        return self.value(r, phi)

    def grad_cartesian(self, r, phi) -> tuple[np.ndarray, np.ndarray]:
        d_r, d_t = self.grad(r, phi)
        c, s = np.cos(phi), np.sin(phi)
        return d_r * c - d_t * s, d_r * s + d_t * c

    def grad_sq(self, r, phi) -> np.ndarray:
        d_r, d_t = self.grad(r, phi)
        return d_r ** 2 + d_t ** 2

    def scaled(self, c: float) -> "PolarField":
        def grad(r, phi):
            d_r, d_t = self.grad(r, phi)
            return c * d_r, c * d_t
        return PolarField(f"{c:g}*{self.name}", lambda r, phi: c * self.value(r, phi), grad)


RAD = PolarField("rad", rad, _rad_grad)
ISQ = PolarField("isq", isq, _isq_grad)
ZERO = PolarField("zero", lambda r, phi: np.zeros(np.broadcast(r, phi).shape),
                  lambda r, phi: (np.zeros(np.broadcast(r, phi).shape),) * 2)
FIELDS = {"rad": RAD, "isq": ISQ, "zero": ZERO}


def as_field(field) -> PolarField:
    if isinstance(field, PolarField):
        return field
    try:
        return FIELDS[field]
    except KeyError:
        raise DomainError(f"unknown field {field!r}; expected one of {sorted(FIELDS)}") from None


def grad_polar(field, p: PolarPoint) -> tuple[float, float]:
    """``(d_r, d_phi / r)`` of a named or explicit field at ``p``."""
    d_r, d_t = as_field(field).grad(np.float64(p.r), np.float64(p.phi))
    return float(d_r), float(d_t)


# --------------------------------------------------------------------------
# crack curves


def _fd_derivative(fn, r, order, rel_step=1e-3):
    r = np.asarray(r, dtype=float)
    h = rel_step * r
    offsets = np.arange(-3, 4)
    w = fornberg_weights(0.0, offsets, order)
    return sum(wk * fn(r + k * h) for wk, k in zip(w, offsets)) / h ** order


@dataclass(frozen=True)
class CrackParametrization:
    """The crack ``{r (cos alpha(r), sin alpha(r)) : 0 < r < 1}``.

    Derivatives are finite differences unless supplied.
    """

    alpha: Callable[[np.ndarray], np.ndarray]
    dalpha: Callable[[np.ndarray], np.ndarray] | None = None
    d2alpha: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def straight(cls, angle: float = 0.0) -> "CrackParametrization":
        const = lambda r: np.full(np.shape(r), float(angle))
        zero = lambda r: np.zeros(np.shape(r))
        return cls(const, zero, zero)

    @classmethod
    def linear(cls, eps: float) -> "CrackParametrization":
        """``alpha(r) = eps * r``."""
        return cls(lambda r: eps * np.asarray(r, dtype=float),
                   lambda r: np.full(np.shape(r), float(eps)),
                   lambda r: np.zeros(np.shape(r)))

    def __call__(self, r):
        return self.alpha(np.asarray(r, dtype=float))

    def d1(self, r):
        if self.dalpha is not None:
            return self.dalpha(np.asarray(r, dtype=float))
        return _fd_derivative(self.alpha, r, 1)

    def d2(self, r):
        if self.d2alpha is not None:
            return self.d2alpha(np.asarray(r, dtype=float))
        return _fd_derivative(self.alpha, r, 2)

    def smallness(self, n: int = 400) -> float:
        """``sup_r (r |alpha'(r)| + r^2 |alpha''(r)|)`` over a log-spaced sample of (0, 1)."""
        r = np.logspace(-6, np.log10(0.999), n)
        val = float(np.max(r * np.abs(self.d1(r)) + r ** 2 * np.abs(self.d2(r))))
        if not np.isfinite(val):
            raise DomainError("crack parametrization has non-finite derivatives")
        return val

    def scaled(self, rho: float) -> "CrackParametrization":
        """``alpha^rho(r) = alpha(rho r)``."""
        return CrackParametrization(lambda r: self.alpha(rho * np.asarray(r, dtype=float)),
                                    lambda r: rho * self.d1(rho * np.asarray(r, dtype=float)),
                                    lambda r: rho ** 2 * self.d2(rho * np.asarray(r, dtype=float)))


STRAIGHT = CrackParametrization.straight()


@dataclass(frozen=True)
class CrackedField:
    """A field in absolute polar coordinates together with its crack."""

    field: PolarField
    crack: CrackParametrization = STRAIGHT

    @classmethod
    def from_relative(cls, profile: PolarField, crack: CrackParametrization,
                      name: str | None = None) -> "CrackedField":
        """Attach a field written in crack-relative angles ``psi = phi - alpha(r)``."""
        def value(r, phi):
            return profile.value(r, phi - crack(r))

        def grad(r, phi):
            g_r, g_t = profile.grad(r, phi - crack(r))
            return g_r - r * crack.d1(r) * g_t, g_t

        return cls(PolarField(name or f"{profile.name}@crack", value, grad), crack)

    def relative(self, phi, r):
        """Value at relative angle ``phi`` (0 and 2 pi on the crack) and radius ``r``."""
        r = np.asarray(r, dtype=float)
        return self.field.value(r, np.asarray(phi, dtype=float) + self.crack(r))


def rescale(u, alpha: CrackParametrization | None, rho: float) -> CrackedField:
    """Blow up ``u`` at the tip: ``rho^(-1/2) u(., rho r)`` with crack ``alpha(rho r)``.

    ``u`` may be a field (paired with ``alpha``) or a :class:`CrackedField`
    (``alpha`` ignored).  The relative view of the result is
    ``(phi, r) -> rho^(-1/2) u(phi + alpha(rho r), rho r)``.
    """
    if not 0.0 < rho <= 0.25:
        raise DomainError(f"rescaling factor must lie in (0, 1/4], got {rho}")
    if isinstance(u, CrackedField):
        base, crack = u.field, u.crack
    else:
        base, crack = as_field(u), alpha if alpha is not None else STRAIGHT
    s = rho ** -0.5

    def value(r, phi):
        return s * base.value(rho * np.asarray(r, dtype=float), phi)

    def grad(r, phi):
        g_r, g_t = base.grad(rho * np.asarray(r, dtype=float), phi)
        return s * rho * g_r, s * rho * g_t

    return CrackedField(PolarField(f"{base.name}^{rho:g}", value, grad), crack.scaled(rho))


def disk_energy(field, r: float, n_s: int = 513, n_phi: int = 513,
                crack: CrackParametrization = STRAIGHT) -> float:
    """Dirichlet energy of ``field`` on the disk of radius ``r`` minus the crack.

    Tensor Simpson in ``(sqrt(rho), psi)``; the square-root radial variable
    turns the half-integer powers of a crack-tip expansion into polynomials.
    """
    if not 0.0 < r <= 1.0:
        raise DomainError(f"radius must lie in (0, 1], got {r}")
    f = as_field(field)
    sg, pg = Grid1D(0.0, np.sqrt(r), n_s), Grid1D(0.0, 2 * np.pi, n_phi)
    s, psi = np.meshgrid(sg.nodes[1:], pg.nodes, indexing="ij")
    rho = s ** 2
    phi = psi + crack(rho)
    integrand = np.zeros((n_s, n_phi))
    integrand[1:] = f.grad_sq(rho, phi) * rho * 2.0 * s  # rho drho = 2 s^3 ds
    return float(integrate_samples(integrate_samples(integrand, pg), sg))


def polar_laplacian(values: np.ndarray, r_grid: Grid1D, phi_grid: Grid1D) -> np.ndarray:
    """``r^-2 f_phiphi + r^-1 (r f_r)_r`` of samples indexed ``[r, phi]``."""
    r = r_grid.nodes[:, None]
    f_r = differentiate_samples(values, r_grid.h, 1, axis=0)
    f_rr = differentiate_samples(values, r_grid.h, 2, axis=0)
    f_pp = differentiate_samples(values, phi_grid.h, 2, axis=1)
    return f_pp / r ** 2 + f_rr + f_r / r


# --------------------------------------------------------------------------
# log-polar coordinates


@dataclass(frozen=True, eq=False)
class LogPolarState:
    """``f(phi, t) = e^(t/2) w(phi + theta(t), e^-t)`` sampled on a cylinder grid."""

    grid: CylinderGrid
    theta: Callable[[np.ndarray], np.ndarray]
    f: np.ndarray
    boundary_tol: float = BOUNDARY_TOL

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.shape != self.grid.shape:
            raise GridError(f"field shape {f.shape} does not match grid {self.grid.shape}")
        scale = max(1.0, float(np.max(np.abs(f))))
        trace = max(np.max(np.abs(f[0])), np.max(np.abs(f[-1])))
        if trace > self.boundary_tol * scale:
            raise DomainError(f"Dirichlet trace on the crack is {trace:.3e}, not zero")
        object.__setattr__(self, "f", f)


def theta_of(alpha: CrackParametrization) -> Callable[[np.ndarray], np.ndarray]:
    return lambda t: alpha(np.exp(-np.asarray(t, dtype=float)))


def to_log_polar(w, alpha: CrackParametrization | None, cylinder: CylinderGrid,
                 boundary_tol: float = BOUNDARY_TOL) -> LogPolarState:
    """Sample ``e^(t/2) w(phi + alpha(e^-t), e^-t)`` on ``cylinder``.

    ``w`` must already vanish on the crack (the caller fixes its additive
    constant).
    """
    if isinstance(w, CrackedField):
        field, alpha = w.field, w.crack
    else:
        field, alpha = as_field(w), alpha if alpha is not None else STRAIGHT
    if cylinder.t.lo <= 0:
        raise DomainError("log-polar t-range must lie in (0, inf)")
    theta = theta_of(alpha)
    t = cylinder.t.nodes
    th = theta(t)
    if not np.all(np.isfinite(th)):
        raise DomainError("crack angle is not finite on the requested range")
    phi, tt = cylinder.mesh()
    values = np.exp(tt / 2.0) * field.value(np.exp(-tt), phi + th[None, :])
    return LogPolarState(cylinder, theta, values, boundary_tol)


def from_log_polar(state: LogPolarState) -> CrackedField:
    """Reconstruct ``w(phi, r) = r^(1/2) f(phi - theta(-ln r), -ln r)`` by spline interpolation."""
    spline = RectBivariateSpline(state.grid.phi.nodes, state.grid.t.nodes, state.f, kx=5, ky=5)
    theta = state.theta

    def value(r, phi):
        r, phi = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(phi, dtype=float))
        t = -np.log(r)
        return np.sqrt(r) * spline.ev(phi - theta(t), t)

    def grad(r, phi):
        r, phi = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(phi, dtype=float))
        t = -np.log(r)
        psi = phi - theta(t)
        f = spline.ev(psi, t)
        f_p = spline.ev(psi, t, dx=1)
        f_t = spline.ev(psi, t, dy=1)
        th_dot = _fd_derivative(theta, t, 1) if np.all(t > 0) else np.zeros_like(t)
        return r ** -0.5 * (f / 2 - f_t + th_dot * f_p), r ** -0.5 * f_p

    alpha = CrackParametrization(lambda r: theta(-np.log(np.asarray(r, dtype=float))))
    return CrackedField(PolarField("from_log_polar", value, grad), alpha)


def export_csv(path: str | Path, phi: np.ndarray, second: np.ndarray, values: np.ndarray,
               second_name: str = "r_or_t") -> Path:
    """Write a sampled 2-D field as long-format CSV with columns ``phi, r_or_t, value``."""
    path = Path(path)
    P, S = np.meshgrid(phi, second, indexing="ij")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi", second_name, "value"])
        writer.writerows(zip(*(map(repr, np.ravel(a).tolist()) for a in (P, S, values))))
    return path


def read_csv_columns(path: str | Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DomainError(f"{path} holds no rows")
    return {k: np.array([float(row[k]) for row in rows]) for k in rows[0]}


def sample_field(field, cylinder_or_points: Iterable) -> np.ndarray:
    f = as_field(field)
    r, phi = cylinder_or_points
    return f.value(np.asarray(r, dtype=float), np.asarray(phi, dtype=float))
