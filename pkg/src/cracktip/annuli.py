"""Quadratic energies of linear solutions on unit time-annuli and the three-annuli dichotomy."""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .expansion import expand_samples
from .linearized import (LinearizedTrajectory, ModalSolution, crack_moment, extra_condition)
from .numerics import Grid1D, angular_grid, differentiate_samples, integrate_samples
from .spectrum import nu

DEFAULT_ETA = 0.05
DEFAULT_C0 = 0.01
DEFAULT_QUAD_NODES = 1025
SAMPLED_K = 32
ZERO_TOL = 1e-300
VERDICTS = ("hypothesis_false", "implication_holds", "VIOLATION", "precondition_violated")


@dataclass(frozen=True)
class AnnulusEnergies:
    E: float
    F: float
    G: float
    interval: tuple[float, float]
    c0: float = DEFAULT_C0
    path: str = "analytic"

    def __post_init__(self):
        if self.E < 0 or self.F < 0:
            raise DomainError("energies are sums of squares and cannot be negative")

    def value(self, which: str) -> float:
        if which not in ("E", "F", "G"):
            raise DomainError(f"unknown functional {which!r}")
        return getattr(self, which)


def _modal_of(traj) -> ModalSolution | None:
    if isinstance(traj, ModalSolution):
        return traj
    return traj.modal


def _t_range(traj) -> tuple[float, float]:
    if isinstance(traj, ModalSolution):
        return -np.inf, np.inf
    return traj.t[0], traj.t[-1]


def _modal_energies(modal: ModalSolution, sigma: float, s: float, c0: float,
                    n: int = DEFAULT_QUAD_NODES) -> AnnulusEnergies:
    g = Grid1D(sigma, s, n)
    t = g.nodes
    a, a2 = modal.coefficients(t, 0), modal.coefficients(t, 2)
    nu4 = np.array([nu(k) ** 4 for k in range(2, modal.K + 1)])[:, None]
    E = integrate_samples(np.sum(nu4 * a[2:] ** 2 + a2[2:] ** 2, axis=0), g)
    phi = angular_grid()
    lam1, lam2 = modal.lam(t, phi, 1), modal.lam(t, phi, 2)
    F = integrate_samples(lam1 ** 2 + lam2 ** 2 + a[0] ** 2 + a[1] ** 2 + a2[0] ** 2 + a2[1] ** 2, g)
    E, F = float(E), float(F)
    return AnnulusEnergies(E, F, max(E, c0 * F), (sigma, s), c0, "analytic")


@dataclass(frozen=True, eq=False)
class _SampledCoefficients:
    a: np.ndarray
    a2: np.ndarray


_SAMPLED_CACHE: "weakref.WeakKeyDictionary[LinearizedTrajectory, dict]" = weakref.WeakKeyDictionary()


def _sampled_coefficients(traj: LinearizedTrajectory, K: int) -> _SampledCoefficients:
    per_traj = _SAMPLED_CACHE.setdefault(traj, {})
    if K not in per_traj:
        a = expand_samples(traj.zeta, traj.grid.phi, K)
        per_traj[K] = _SampledCoefficients(a, differentiate_samples(a, traj.grid.t.h, 2, axis=1))
    return per_traj[K]


def _node_index(t: np.ndarray, x: float) -> int:
    i = int(np.argmin(np.abs(t - x)))
    if abs(t[i] - x) > 1e-9 * max(1.0, abs(x)):
        raise DomainError(f"sampled energies need interval ends on time nodes; {x} is not one")
    return i


def _sampled_energies(traj: LinearizedTrajectory, sigma: float, s: float, c0: float,
                      K: int) -> AnnulusEnergies:
    t = traj.t
    i, j = _node_index(t, sigma), _node_index(t, s)
    if j - i + 1 < 8:
        raise DomainError("interval holds fewer than 8 time nodes")
    c = _sampled_coefficients(traj, K)
    g = Grid1D(t[i], t[j], j - i + 1)
    sl = slice(i, j + 1)
    nu4 = np.array([nu(k) ** 4 for k in range(2, K + 1)])[:, None]
    E = integrate_samples(np.sum(nu4 * c.a[2:, sl] ** 2 + c.a2[2:, sl] ** 2, axis=0), g)
    F = integrate_samples(traj.lam_dot[sl] ** 2 + traj.lam_ddot[sl] ** 2 + c.a[0, sl] ** 2
                          + c.a[1, sl] ** 2 + c.a2[0, sl] ** 2 + c.a2[1, sl] ** 2, g)
    E, F = float(E), float(F)
    return AnnulusEnergies(E, F, max(E, c0 * F), (sigma, s), c0, "finite-difference")


def energies(traj, sigma: float, s: float, c0: float = DEFAULT_C0, K: int = SAMPLED_K,
             path: str = "auto") -> AnnulusEnergies:
    """``E``, ``F`` and ``G = max(E, c0 F)`` over ``[sigma, s]``.

    Modal trajectories use exact coefficients and their second derivatives
    (``path = "analytic"``); otherwise ``zeta`` is expanded at every time
    node and ``a_k''`` comes from differences in ``t``.
    """
    if not sigma < s:
        raise DomainError(f"need sigma < s, got [{sigma}, {s}]")
    lo, hi = _t_range(traj)
    if sigma < lo - 1e-12 or s > hi + 1e-12:
        raise DomainError(f"[{sigma}, {s}] is outside the trajectory range [{lo}, {hi}]")
    if c0 <= 0:
        raise DomainError("c0 must be positive")
    modal = _modal_of(traj)
    if path not in ("auto", "analytic", "finite-difference"):
        raise DomainError(f"unknown path {path!r}")
    if modal is not None and path != "finite-difference":
        return _modal_energies(modal, sigma, s, c0)
    if isinstance(traj, ModalSolution) or path == "analytic":
        raise DomainError("analytic energies need a modal solution")
    return _sampled_energies(traj, sigma, s, c0, K)


# --------------------------------------------------------------------------
# dichotomy


@dataclass(frozen=True)
class AnnuliVerdict:
    verdict: str
    which: str
    base: float
    eta: float
    c0: float
    annuli: tuple[AnnulusEnergies, AnnulusEnergies, AnnulusEnergies]
    condition: str | None = None
    condition_values: tuple[float, ...] = field(default_factory=tuple)

    @property
    def values(self) -> tuple[float, float, float]:
        return tuple(a.value(self.which) for a in self.annuli)

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "which": self.which, "base": self.base, "eta": self.eta,
                "c0": self.c0, "condition": self.condition,
                "condition_values": list(self.condition_values),
                "annuli": [{"interval": list(a.interval), "E": a.E, "F": a.F, "G": a.G,
                            "path": a.path} for a in self.annuli]}


def condition_values(traj: LinearizedTrajectory, times, condition: str = "printed") -> np.ndarray:
    """The integral condition at ``times``: the printed form or the re-derived crack moment."""
    if condition == "printed":
        return np.array([extra_condition(traj, float(s)) for s in times])
    if condition == "rederived":
        prof = np.sqrt(2 / np.pi) * crack_moment(traj)
        return np.interp(times, traj.t, prof)
    raise DomainError(f"unknown condition {condition!r}")


def dichotomy(first: float, middle: float, last: float, eta: float,
              zero_tol: float = ZERO_TOL) -> str:
    """``hypothesis_false`` unless ``middle >= (1 - eta) first``; then check ``last >= (1 + eta) middle``.

    Annuli with both compared energies zero are vacuous and count as ``hypothesis_false``.
    """
    if first <= zero_tol and middle <= zero_tol:
        return "hypothesis_false"
    if middle < (1 - eta) * first:
        return "hypothesis_false"
    return "implication_holds" if last >= (1 + eta) * middle else "VIOLATION"


def three_annuli_check(traj, base: float = 0.0, eta: float = DEFAULT_ETA, c0: float = DEFAULT_C0,
                       which: str = "E", condition: str = "printed",
                       condition_tol: float = 1e-6, K: int = SAMPLED_K) -> AnnuliVerdict:
    """Verdict of the dichotomy on ``[base, base+1], [base+1, base+2], [base+2, base+3]``.

    For ``which = "G"`` the dichotomy is only claimed for solutions that
    satisfy the integral condition; if the condition fails (relative to
    ``sqrt(F)`` over the three annuli) the verdict is ``precondition_violated``.
    """
    if which not in ("E", "G"):
        raise DomainError(f"which must be 'E' or 'G', got {which!r}")
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    lo, hi = _t_range(traj)
    if base < lo - 1e-12 or base + 3 > hi + 1e-12:
        raise DomainError(f"[{base}, {base + 3}] not inside the trajectory range [{lo}, {hi}]")
    annuli = tuple(energies(traj, base + j, base + j + 1, c0, K) for j in range(3))
    vals = [a.value(which) for a in annuli]
    cond, cvals = None, ()
    if which == "G":
        if isinstance(traj, ModalSolution):
            raise DomainError("the precondition of the G-dichotomy needs a sampled trajectory")
        cond = condition
        cvals = tuple(float(x) for x in condition_values(traj, base + np.array([0.5, 1.5, 2.5]),
                                                         condition))
        scale = 1.0 + np.sqrt(sum(a.F + a.E for a in annuli))
        if max(abs(x) for x in cvals) > condition_tol * scale:
            return AnnuliVerdict("precondition_violated", which, base, eta, c0, annuli, cond, cvals)
    verdict = dichotomy(*vals, eta)
    return AnnuliVerdict(verdict, which, base, eta, c0, annuli, cond, cvals)


def decay_chain(traj, n_annuli: int, base: float = 0.0, which: str = "G",
                c0: float = DEFAULT_C0) -> np.ndarray:
    """Ratios ``value(k+1, k+2) / value(k, k+1)`` over consecutive unit annuli."""
    vals = np.array([energies(traj, base + j, base + j + 1, c0).value(which)
                     for j in range(n_annuli)])
    return vals[1:] / vals[:-1]


# --------------------------------------------------------------------------
# convexity


def default_c_hat() -> float:
    """``2 mu_2^2``: for ``w = D e^(a t) + C e^(-b t)`` with ``a, b >= mu_2``,
    ``(w^2)'' - 2 mu_2^2 w^2`` is a positive semidefinite form in ``(C, D)``."""
    return 2 * (nu(2) - 0.5) ** 2


def energy_density(modal: ModalSolution, t, deriv: int = 0) -> np.ndarray:
    """``h(t) = sum_k (nu_k^4 a_k^2 + (a_k'')^2)`` or its second derivative (``deriv = 2``)."""
    if deriv not in (0, 2):
        raise DomainError("only h and h'' are available")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    nu4 = np.array([nu(k) ** 4 for k in range(2, modal.K + 1)])[:, None]
    d = [modal.coefficients(t, j)[2:] for j in range(5)]
    if deriv == 0:
        return np.sum(nu4 * d[0] ** 2 + d[2] ** 2, axis=0)
    # (w^2)'' = 2 w'^2 + 2 w w''
    return np.sum(nu4 * 2 * (d[1] ** 2 + d[0] * d[2]) + 2 * (d[3] ** 2 + d[2] * d[4]), axis=0)


def convexity_check(traj, t_range: tuple[float, float], c_hat: float | None = None,
                    n: int = 401, K: int = SAMPLED_K) -> float:
    """``min_t (h''(t) - c_hat h(t))`` on ``t_range``."""
    c_hat = default_c_hat() if c_hat is None else c_hat
    modal = _modal_of(traj)
    if modal is not None:
        t = np.linspace(*t_range, n)
        return float(np.min(energy_density(modal, t, 2) - c_hat * energy_density(modal, t, 0)))
    c = _sampled_coefficients(traj, K)
    nu4 = np.array([nu(k) ** 4 for k in range(2, K + 1)])[:, None]
    h = np.sum(nu4 * c.a[2:] ** 2 + c.a2[2:] ** 2, axis=0)
    h2 = differentiate_samples(h, traj.grid.t.h, 2)
    mask = (traj.t >= t_range[0]) & (traj.t <= t_range[1])
    return float(np.min((h2 - c_hat * h)[mask]))
