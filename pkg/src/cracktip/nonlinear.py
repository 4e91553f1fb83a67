"""The full log-polar system for ``(f, theta)`` and its first variation.

With ``r = e^-t`` and the crack at angle ``theta(t)``, the conjugate field
in relative angles ``f(phi, t)`` satisfies

    f_t = f/4 + f_phiphi + f_tt + (th' f_phi + th'^2 f_phiphi - 2 th' f_tphi - th'' f_phi),
    f(0, t) = f(2 pi, t) = 0,
    (th'' - th' - th'^3) / (1 + th'^2)^(5/2) = f_phi(2 pi, t)^2 - f_phi(0, t)^2.

Putting ``f = isq + delta v`` and ``theta = delta lam`` and dropping
``O(delta^2)`` gives the linear system of :mod:`cracktip.linearized`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, GridError
from .fields import CrackParametrization
from .linearized import SQRT_2PI, LinearizedTrajectory, isq_phi
from .numerics import (CylinderGrid, RootBracket, differentiate_samples, find_root)

BOUNDARY_TOL = 1e-10
FD_TOL = 1e-6
DEFAULT_DELTAS = (1e-2, 5e-3, 2.5e-3)
MAX_DELTA = 0.1
# residual norms below this are rounding noise and carry no exponent
FIT_FLOOR = 1e-13
SQRT_2_OVER_PI = np.sqrt(2 / np.pi)


def isq_profile(phi):
    """``sqrt(2/pi) sin(phi/2)``: the tip field ``Isq`` in log-polar form (t-independent)."""
    return SQRT_2_OVER_PI * np.sin(np.asarray(phi, dtype=float) / 2)


# --------------------------------------------------------------------------
# crack angle in log-polar time


@dataclass(frozen=True)
class ThetaPath:
    """``theta(t)`` with its first two derivatives, all vectorized."""

    theta: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def constant(cls, c: float = 0.0) -> "ThetaPath":
        z = lambda t: np.zeros(np.shape(t))
        return cls(lambda t: np.full(np.shape(t), float(c)), z, z)

    @classmethod
    def linear(cls, eps: float, c: float = 0.0) -> "ThetaPath":
        """The logarithmic spiral ``theta = c + eps t``."""
        return cls(lambda t: c + eps * np.asarray(t, dtype=float),
                   lambda t: np.full(np.shape(t), float(eps)), lambda t: np.zeros(np.shape(t)))

    @classmethod
    def exponential(cls, amplitude: float, rate: float, c: float = 0.0) -> "ThetaPath":
        """``c + amplitude e^(-rate t)``."""
        e = lambda t: amplitude * np.exp(-rate * np.asarray(t, dtype=float))
        return cls(lambda t: c + e(t), lambda t: -rate * e(t), lambda t: rate ** 2 * e(t))

    @classmethod
    def trig_series(cls, a, b, w, c: float = 0.0) -> "ThetaPath":
        """``c + sum_j a_j e^(-b_j t) sin(w_j t)`` with closed-form derivatives."""
        a, b, w = (np.asarray(x, dtype=float) for x in (a, b, w))

        def parts(t):
            t = np.asarray(t, dtype=float)[..., None]
            return np.exp(-b * t), np.sin(w * t), np.cos(w * t)

        def val(t):
            e, s, co = parts(t)
            return c + np.sum(a * e * s, axis=-1)

        def d1(t):
            e, s, co = parts(t)
            return np.sum(a * e * (w * co - b * s), axis=-1)

        def d2(t):
            e, s, co = parts(t)
            return np.sum(a * e * ((b ** 2 - w ** 2) * s - 2 * b * w * co), axis=-1)

        return cls(val, d1, d2)

    def __call__(self, t):
        return self.theta(t)


def theta_transforms(alpha: CrackParametrization) -> ThetaPath:
    """``theta(t) = alpha(e^-t)`` with the chain rule for both derivatives."""
    def chk(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("log-polar time must be >= 0 (radius <= 1)")
        return t, np.exp(-t)

    def th(t):
        return alpha(chk(t)[1])

    def d1(t):
        _, r = chk(t)
        return -r * alpha.d1(r)

    def d2(t):
        _, r = chk(t)
        return r * alpha.d1(r) + r ** 2 * alpha.d2(r)

    return ThetaPath(th, d1, d2)


def alpha_from_theta(theta: ThetaPath) -> CrackParametrization:
    """Inverse of :func:`theta_transforms`: ``alpha(r) = theta(-log r)``."""
    def chk(r):
        r = np.asarray(r, dtype=float)
        if np.any((r <= 0) | (r > 1)):
            raise DomainError("radius must lie in (0, 1]")
        return r, -np.log(r)

    def a(r):
        return theta(chk(r)[1])

    def d1(r):
        r, t = chk(r)
        return -theta.d1(t) / r

    def d2(r):
        r, t = chk(r)
        return (theta.d1(t) + theta.d2(t)) / r ** 2

    return CrackParametrization(a, d1, d2)


def curvature(theta: ThetaPath, t) -> np.ndarray:
    """``k = e^t (th' + th'^3 - th'') / (1 + th'^2)^(3/2)`` at ``r = e^-t``."""
    t = np.asarray(t, dtype=float)
    d1, d2 = theta.d1(t), theta.d2(t)
    return np.exp(t) * (d1 + d1 ** 3 - d2) / (1 + d1 ** 2) ** 1.5


def curvature_profile(crack: CrackParametrization, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return curvature(theta_transforms(crack), -np.log(r))


def parametric_curvature_fd(theta: ThetaPath, t, h: float = 1e-2) -> np.ndarray:
    """Signed curvature of ``rho(t) = e^-t (cos theta, sin theta)`` by centred differences in ``t``.

    The curve is oriented by increasing ``t``, i.e. towards the tip.  The
    sixth-order stencils balance truncation ``O(h^6)`` against the roundoff
    ``O(eps / h^2)`` of the second derivative near ``h = 1e-2``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    offsets = np.arange(-3, 4) * h
    s = t[:, None] + offsets[None, :]
    x, y = np.exp(-s) * np.cos(theta(s)), np.exp(-s) * np.sin(theta(s))
    w1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / (60 * h)
    w2 = np.array([2, -27, 270, -490, 270, -27, 2]) / (180 * h ** 2)
    x1, y1, x2, y2 = x @ w1, y @ w1, x @ w2, y @ w2
    return (x1 * y2 - y1 * x2) / (x1 ** 2 + y1 ** 2) ** 1.5


def curvature_decay_constant(theta: ThetaPath, t, delta0: float) -> np.ndarray:
    """``|k(r)| r^-delta0`` along ``t``; bounded iff ``|k| <= C r^delta0``."""
    t = np.asarray(t, dtype=float)
    return np.abs(curvature(theta, t)) * np.exp(delta0 * t)


# --------------------------------------------------------------------------
# residuals


@dataclass(frozen=True, eq=False)
class NonlinearState:
    """``f[phi, t]`` on a cylinder grid and ``theta`` with derivatives at the time nodes."""

    grid: CylinderGrid
    f: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray | None = None
    theta_ddot: np.ndarray | None = None
    boundary_tol: float = BOUNDARY_TOL

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        th = np.asarray(self.theta, dtype=float).reshape(-1)
        if f.shape != self.grid.shape:
            raise GridError(f"f has shape {f.shape}, grid is {self.grid.shape}")
        if th.shape != (self.grid.t.n,):
            raise GridError("theta needs one sample per time node")
        if min(self.grid.shape) < 9:
            raise GridError("mixed second derivatives need at least 9 nodes per direction")
        scale = max(1.0, float(np.max(np.abs(f))))
        trace = float(max(np.max(np.abs(f[0])), np.max(np.abs(f[-1]))))
        if trace > self.boundary_tol * scale:
            raise DomainError(f"f does not vanish on the crack (trace {trace:.3e})")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "theta", th)
        ht = self.grid.t.h
        if self.theta_dot is None:
            object.__setattr__(self, "theta_dot", differentiate_samples(th, ht, 1))
        if self.theta_ddot is None:
            object.__setattr__(self, "theta_ddot", differentiate_samples(th, ht, 2))

    @classmethod
    def from_path(cls, grid: CylinderGrid, f: np.ndarray, path: ThetaPath) -> "NonlinearState":
        t = grid.t.nodes
        return cls(grid, f, path(t), path.d1(t), path.d2(t))


@dataclass(frozen=True)
class SisResiduals:
    pde: np.ndarray            # [phi, t]
    bc: np.ndarray             # [2, t]
    transmission: np.ndarray   # [t]

    def max_abs(self) -> dict[str, float]:
        return {"pde": float(np.max(np.abs(self.pde))), "bc": float(np.max(np.abs(self.bc))),
                "transmission": float(np.max(np.abs(self.transmission)))}


def sis_residual(state: NonlinearState) -> SisResiduals:
    """Residuals of the interior equation, the Dirichlet trace and the transmission condition."""
    g = state.grid
    f = state.f
    hp, ht = g.phi.h, g.t.h
    f_p = differentiate_samples(f, hp, 1, axis=0)
    f_pp = differentiate_samples(f, hp, 2, axis=0)
    f_t = differentiate_samples(f, ht, 1, axis=1)
    f_tt = differentiate_samples(f, ht, 2, axis=1)
    f_tp = differentiate_samples(f_t, hp, 1, axis=0)
    d1, d2 = state.theta_dot[None, :], state.theta_ddot[None, :]
    pde = f_t - (f / 4 + f_pp + f_tt + d1 * f_p + d1 ** 2 * f_pp - 2 * d1 * f_tp - d2 * f_p)
    bc = np.vstack([f[0], f[-1]])
    d1, d2 = state.theta_dot, state.theta_ddot
    transmission = (d2 - d1 - d1 ** 3) / (1 + d1 ** 2) ** 2.5 - (f_p[-1] ** 2 - f_p[0] ** 2)
    return SisResiduals(pde, bc, transmission)


# --------------------------------------------------------------------------
# first variation


def perturbed_state(traj: LinearizedTrajectory, delta: float) -> NonlinearState:
    """``f = isq + delta v`` and ``theta = delta lam`` on the grid of ``traj``."""
    base = isq_profile(traj.phi)[:, None]
    return NonlinearState(traj.grid, base + delta * traj.v, delta * traj.lam,
                          delta * traj.lam_dot, delta * traj.lam_ddot)


def fit_exponent(deltas: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log(value)`` against ``log(delta)``; NaN if any value is noise."""
    values = np.asarray(values, dtype=float)
    if np.any(values <= FIT_FLOOR):
        return float("nan")
    return float(np.polyfit(np.log(deltas), np.log(values), 1)[0])


@dataclass(frozen=True)
class ConsistencyTable:
    deltas: tuple[float, ...]
    residuals: dict[str, tuple[float, ...]]
    exponents: dict[str, float]
    linear_residuals: dict[str, float]

    def in_band(self, lo: float = 1.9, hi: float = 2.1) -> dict[str, bool]:
        return {k: bool(lo <= p <= hi) for k, p in self.exponents.items()}

    def min_exponent(self) -> float:
        ps = [p for p in self.exponents.values() if np.isfinite(p)]
        return min(ps) if ps else float("nan")

    def as_dict(self) -> dict:
        return {"deltas": list(self.deltas),
                "residuals": {k: list(v) for k, v in self.residuals.items()},
                "exponents": dict(self.exponents), "in_band": self.in_band(),
                "linear_residuals": dict(self.linear_residuals)}


def linearization_consistency(traj: LinearizedTrajectory,
                              deltas: Sequence[float] = DEFAULT_DELTAS) -> ConsistencyTable:
    """Max-norm residuals of the full system along ``(isq + delta v, delta lam)``,
    measured against the discrete residual at ``delta = 0``.

    If ``(v, lam)`` solves the linear system, every residual is ``o(delta)``.
    The interior equation is ``O(delta^2)``; the transmission residual is
    ``O(delta^3)`` for odd ``v`` because ``v_phi(2 pi) = v_phi(0)`` removes
    the quadratic term; the Dirichlet residual vanishes identically.
    """
    deltas = tuple(float(d) for d in deltas)
    if not deltas or any(not 0 < d <= MAX_DELTA for d in deltas):
        raise DomainError(f"deltas must lie in (0, {MAX_DELTA}], got {deltas}")
    # the discrete residual of the unperturbed state is pure truncation error; subtracting it
    # keeps the fit from flattening once delta^2 drops to the FD floor
    base = sis_residual(perturbed_state(traj, 0.0))
    keys = ("pde", "bc", "transmission")
    rows = []
    for d in deltas:
        res = sis_residual(perturbed_state(traj, d))
        rows.append({k: float(np.max(np.abs(getattr(res, k) - getattr(base, k)))) for k in keys})
    residuals = {k: tuple(r[k] for r in rows) for k in keys}
    exponents = {k: fit_exponent(deltas, residuals[k]) for k in keys}
    # the linear part divided out: residual / delta at the smallest delta
    linear = {k: residuals[k][-1] / deltas[-1] for k in keys}
    return ConsistencyTable(deltas, residuals, exponents, linear)


# --------------------------------------------------------------------------
# negative control


def flipped_psi(x):
    """``8x cos x + (pi^2 - 4x^2) sin x``: the characteristic function with the transmission sign flipped."""
    x = np.asarray(x, dtype=float)
    return 8 * x * np.cos(x) + (np.pi ** 2 - 4 * x ** 2) * np.sin(x)


def flipped_nu() -> float:
    """Slowest decaying exponent of the flipped system, from the root in ``(pi, 3 pi / 2)``."""
    return find_root(lambda x: float(flipped_psi(x)), RootBracket(np.pi, 1.5 * np.pi)) / np.pi


def flipped_sign_mode(grid: CylinderGrid, C: float = 1.0) -> LinearizedTrajectory:
    """Exact solution of the linear system with ``lam' - lam'' = -2 sqrt(2/pi) v_phi(0)``.

    ``zeta = C e^((1/2 - nu) t) sin(nu (phi - pi))`` with ``nu`` from
    :func:`flipped_psi`; ``lam = -sqrt(2 pi) zeta(0, t)`` and
    ``v = zeta + lam isq_phi``.  It solves the interior equation and the
    Dirichlet condition, so only the transmission residual detects the flip.
    """
    n = flipped_nu()
    m = 0.5 - n
    t, phi = grid.t.nodes, grid.phi.nodes
    a = C * np.exp(m * t)
    prof = np.sin(n * (phi - np.pi))
    z0 = np.sin(-n * np.pi)
    lam = -SQRT_2PI * z0 * a
    v = np.outer(prof, a) + np.outer(isq_phi(phi), lam)
    v[0] = v[-1] = 0.0  # exact zero; the outer products cancel only to rounding
    v_t = np.outer(prof, m * a) + np.outer(isq_phi(phi), m * lam)
    v_tt = np.outer(prof, m * m * a) + np.outer(isq_phi(phi), m * m * lam)
    v_t[0] = v_t[-1] = v_tt[0] = v_tt[-1] = 0.0
    return LinearizedTrajectory(grid, v, lam, m * lam, m * m * lam, v_t, v_tt)
