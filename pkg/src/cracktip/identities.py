"""Quadrature checks of the inner-variation identities on a disk around the tip.

For a critical point ``u`` with crack ``S`` and a vector field ``eta``,

    int_{B_r \\ S} (|grad u|^2 div eta - 2 grad u^T D eta grad u)
      + int_{S cap B_r} e^T D eta e
    = int_{dB_r \\ S} (|grad u|^2 eta.nu - 2 u_nu grad u.eta) + sum_p e(p).eta(p),

where ``e`` is the unit tangent of the crack and, at the points ``p`` where
the crack leaves the disk, ``e(p)`` points outward (``e(p).p > 0``).
Each report carries the four terms and a half-grid Richardson estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, QuadratureError
from .fields import STRAIGHT, CrackParametrization, CrackedField, PolarField, as_field
from .numerics import Grid1D, integrate_samples

QUADRATURE_TOL = 1e-8
CR_TOL = 1e-10
DEFAULT_BULK_NODES = 513
DEFAULT_BOUNDARY_NODES = 2049
DEFAULT_CRACK_NODES = 1025
ROUNDOFF_FACTOR = 64

Jacobian = tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class VectorField2D:
    """``eta(x, y) -> (eta_1, eta_2)`` with ``jac[i][j] = d eta_i / d x_j``."""

    eta: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    jac: Callable[[np.ndarray, np.ndarray], Jacobian]
    conformal: bool = False
    name: str = "eta"

    def __post_init__(self):
        if self.conformal:
            defect = self.cauchy_riemann_defect()
            if defect > CR_TOL:
                raise DomainError(f"{self.name} is declared conformal but violates "
                                  f"Cauchy-Riemann by {defect:.3e}")

    def cauchy_riemann_defect(self, n: int = 64, seed: int = 0) -> float:
        pts = np.random.default_rng(seed).uniform(-1, 1, size=(2, n))
        (a, b), (c, d) = self.jac(*pts)
        scale = max(1.0, float(np.max(np.abs([a, b, c, d]))))
        return float(max(np.max(np.abs(a - d)), np.max(np.abs(b + c))) / scale)

    def __call__(self, x, y):
        return self.eta(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def _full(x, value):
    return np.full(np.shape(x), float(value))


def constant_field(vx: float, vy: float) -> VectorField2D:
    zero = lambda x, y: ((_full(x, 0), _full(x, 0)), (_full(x, 0), _full(x, 0)))
    return VectorField2D(lambda x, y: (_full(x, vx), _full(x, vy)), zero, True,
                         f"constant({vx:g},{vy:g})")


def rotation_field() -> VectorField2D:
    """``x^perp = (-y, x)``."""
    return VectorField2D(lambda x, y: (-y, x + 0 * y),
                         lambda x, y: ((_full(x, 0), _full(x, -1)), (_full(x, 1), _full(x, 0))),
                         True, "rotation")


def identity_field() -> VectorField2D:
    return VectorField2D(lambda x, y: (x + 0 * y, y + 0 * x),
                         lambda x, y: ((_full(x, 1), _full(x, 0)), (_full(x, 0), _full(x, 1))),
                         True, "identity")


def complex_polynomial_field(coeffs, name: str | None = None) -> VectorField2D:
    """``eta = (Re p(z), Im p(z))`` for ``p(z) = sum_k coeffs[k] z^k``; always conformal."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=complex))
    dp = p.deriv()

    def eta(x, y):
        w = p(np.asarray(x) + 1j * np.asarray(y))
        return w.real, w.imag

    def jac(x, y):
        w = dp(np.asarray(x) + 1j * np.asarray(y))
        return (w.real, -w.imag), (w.imag, w.real)

    return VectorField2D(eta, jac, True, name or f"complex_poly{list(np.round(coeffs, 6))}")


def z_squared_field() -> VectorField2D:
    return complex_polynomial_field([0, 0, 1], "z2")


def polynomial_field(cx: dict[tuple[int, int], float], cy: dict[tuple[int, int], float],
                     name: str = "polynomial") -> VectorField2D:
    """``eta_i = sum c[(a, b)] x^a y^b`` with exact Jacobian; conformal only if declared so elsewhere."""
    def ev(c, x, y, dx=0, dy=0):
        out = np.zeros(np.broadcast(x, y).shape)
        for (a, b), v in c.items():
            if a < dx or b < dy:
                continue
            fa = np.prod(np.arange(a - dx + 1, a + 1)) if dx else 1
            fb = np.prod(np.arange(b - dy + 1, b + 1)) if dy else 1
            out = out + v * fa * fb * x ** (a - dx) * y ** (b - dy)
        return out

    return VectorField2D(lambda x, y: (ev(cx, x, y), ev(cy, x, y)),
                         lambda x, y: ((ev(cx, x, y, 1, 0), ev(cx, x, y, 0, 1)),
                                       (ev(cy, x, y, 1, 0), ev(cy, x, y, 0, 1))),
                         False, name)


def random_conformal_field(rng: np.random.Generator, degree: int = 3) -> VectorField2D:
    c = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    return complex_polynomial_field(c, "random_conformal")


def random_polynomial_field(rng: np.random.Generator, degree: int = 3) -> VectorField2D:
    monos = [(a, b) for a in range(degree + 1) for b in range(degree + 1 - a)]
    cx = {m: float(rng.normal()) for m in monos}
    cy = {m: float(rng.normal()) for m in monos}
    return polynomial_field(cx, cy, "random_polynomial")


ETA_CATALOG = {
    "identity": identity_field,
    "rotation": rotation_field,
    "z2": z_squared_field,
}


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class IdentityReport:
    name: str
    lhs: float
    rhs: float
    terms: dict[str, float]
    error_estimate: float
    metadata: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "residual": self.residual,
                "error_estimate": self.error_estimate, "terms": dict(self.terms),
                "metadata": dict(self.metadata)}


def _unpack_field(u, crack) -> tuple[PolarField, CrackParametrization]:
    if isinstance(u, CrackedField):
        return u.field, u.crack
    return as_field(u), crack if crack is not None else STRAIGHT


def _crack_geometry(crack: CrackParametrization, s):
    """``gamma(s)`` and ``gamma'(s)`` for ``gamma(s) = s (cos a(s), sin a(s))``."""
    s = np.asarray(s, dtype=float)
    a, da = crack(s), crack.d1(s)
    c, sn = np.cos(a), np.sin(a)
    return (s * c, s * sn), (c - s * da * sn, sn + s * da * c)


def exit_point(crack: CrackParametrization, r: float):
    """``p`` on ``dB_r`` and the outward unit tangent ``e(p)``; rejects tangential exits."""
    (px, py), (tx, ty) = _crack_geometry(crack, np.float64(r))
    norm = np.hypot(tx, ty)
    ex, ey = tx / norm, ty / norm
    radial = (ex * px + ey * py) / r
    if radial < 1e-8:
        raise DomainError(f"crack meets the circle of radius {r} tangentially (e.nu = {radial:.2e})")
    return (float(px), float(py)), (float(ex), float(ey))


def _cartesian_grad(f: PolarField, r, theta):
    return f.grad_cartesian(r, theta)


def _terms(f: PolarField, crack: CrackParametrization, r: float, eta: VectorField2D,
           n_bulk: int, n_boundary: int, n_crack: int, flip_endpoint: bool) -> dict[str, float]:
    # bulk, in (s, psi) with rho = s^2 and theta = alpha(rho) + psi: dA = 2 s^3 ds dpsi
    sg, pg = Grid1D(0.0, np.sqrt(r), n_bulk), Grid1D(0.0, 2 * np.pi, n_bulk)
    s, psi = np.meshgrid(sg.nodes[1:], pg.nodes, indexing="ij")
    rho = s ** 2
    theta = crack(rho) + psi
    gx, gy = _cartesian_grad(f, rho, theta)
    x, y = rho * np.cos(theta), rho * np.sin(theta)
    (a, b), (c, d) = eta.jac(x, y)
    dens = (gx ** 2 + gy ** 2) * (a + d) - 2 * (gx * gx * a + gx * gy * (b + c) + gy * gy * d)
    bulk_rows = np.zeros((n_bulk, n_bulk))
    bulk_rows[1:] = dens * 2 * s ** 3
    bulk = float(integrate_samples(integrate_samples(bulk_rows, pg), sg))

    # crack, by arclength along gamma(s), s in [0, r]
    cg = Grid1D(0.0, r, n_crack)
    (cx, cy), (tx, ty) = _crack_geometry(crack, cg.nodes)
    (a, b), (c, d) = eta.jac(cx, cy)
    speed = np.hypot(tx, ty)
    crack_term = float(integrate_samples((tx * tx * a + tx * ty * (b + c) + ty * ty * d) / speed, cg))

    # boundary circle, theta in [alpha(r), alpha(r) + 2 pi]
    bg = Grid1D(0.0, 2 * np.pi, n_boundary)
    theta = crack(np.float64(r)) + bg.nodes
    rr = np.full_like(theta, r)
    gx, gy = _cartesian_grad(f, rr, theta)
    nx, ny = np.cos(theta), np.sin(theta)
    ex_, ey_ = eta(r * nx, r * ny)
    u_nu = gx * nx + gy * ny
    dens = (gx ** 2 + gy ** 2) * (ex_ * nx + ey_ * ny) - 2 * u_nu * (gx * ex_ + gy * ey_)
    boundary = float(integrate_samples(dens * r, bg))

    (px, py), (ex, ey) = exit_point(crack, r)
    hx, hy = eta(np.float64(px), np.float64(py))
    endpoint = float(ex * hx + ey * hy) * (-1.0 if flip_endpoint else 1.0)
    return {"bulk": bulk, "crack": crack_term, "boundary": boundary, "endpoint": endpoint}


def _richardson(fine: dict[str, float], coarse: dict[str, float]) -> float:
    scale = sum(abs(v) for v in fine.values()) + 1.0
    diff = sum(abs(fine[k] - coarse[k]) for k in fine)
    return diff / 15.0 + ROUNDOFF_FACTOR * np.finfo(float).eps * scale


def _coarse(n: int) -> int:
    return (n + 1) // 2


def boundary_variation_report(u, crack: CrackParametrization | None = None, r: float = 0.5,
                              eta: VectorField2D | None = None,
                              n_bulk: int = DEFAULT_BULK_NODES,
                              n_boundary: int = DEFAULT_BOUNDARY_NODES,
                              n_crack: int = DEFAULT_CRACK_NODES,
                              flip_endpoint: bool = False) -> IdentityReport:
    """The full identity for ``eta``; ``lhs = bulk + crack``, ``rhs = boundary + endpoint``."""
    if not 0 < r <= 1:
        raise DomainError(f"radius must lie in (0, 1], got {r}")
    f, crack = _unpack_field(u, crack)
    eta = eta or identity_field()
    fine = _terms(f, crack, r, eta, n_bulk, n_boundary, n_crack, flip_endpoint)
    coarse = _terms(f, crack, r, eta, _coarse(n_bulk), _coarse(n_boundary), _coarse(n_crack),
                    flip_endpoint)
    if not all(np.isfinite(v) for v in fine.values()):
        raise QuadratureError("non-finite quadrature value near the slit")
    return IdentityReport(
        f"variation[{eta.name}]", fine["bulk"] + fine["crack"], fine["boundary"] + fine["endpoint"],
        fine, _richardson(fine, coarse),
        {"field": f.name, "radius": r, "eta": eta.name, "conformal": eta.conformal,
         "n_bulk": n_bulk, "n_boundary": n_boundary, "n_crack": n_crack,
         "coarse_terms": coarse, "flip_endpoint": flip_endpoint,
         "quadrature": "tensor Simpson in (sqrt(rho), psi); Simpson on circle and crack"})


def bulk_density_conformal(u, crack: CrackParametrization | None, r: float, eta: VectorField2D,
                           n: int = 129) -> np.ndarray:
    """``|grad u|^2 div eta - 2 grad u^T D eta grad u`` at the nodes of a polar grid of ``B_r``."""
    f, crack = _unpack_field(u, crack)
    rho, psi = np.meshgrid(np.linspace(r / n, r, n), np.linspace(0, 2 * np.pi, n), indexing="ij")
    theta = crack(rho) + psi
    gx, gy = _cartesian_grad(f, rho, theta)
    (a, b), (c, d) = eta.jac(rho * np.cos(theta), rho * np.sin(theta))
    return (gx ** 2 + gy ** 2) * (a + d) - 2 * (gx * gx * a + gx * gy * (b + c) + gy * gy * d)


def crack_length(crack: CrackParametrization, r: float, n: int = DEFAULT_CRACK_NODES) -> tuple[float, float]:
    """``H^1(S cap B_r)`` by arclength quadrature and its Richardson estimate.

    ``|gamma'(s)| = sqrt(1 + s^2 alpha'(s)^2)``; with ``s = e^-t`` this is the
    log-polar speed ``e^-t sqrt(1 + theta'(t)^2)``.
    """
    def length(m):
        g = Grid1D(0.0, r, m)
        _, (tx, ty) = _crack_geometry(crack, g.nodes)
        return float(integrate_samples(np.hypot(tx, ty), g))
    fine, coarse = length(n), length(_coarse(n))
    return fine, abs(fine - coarse) / 15 + ROUNDOFF_FACTOR * np.finfo(float).eps * (1 + abs(fine))


def _circle(f: PolarField, crack: CrackParametrization, r: float, n: int):
    g = Grid1D(0.0, 2 * np.pi, n)
    theta = crack(np.float64(r)) + g.nodes
    rr = np.full_like(theta, r)
    d_r, d_t = f.grad(rr, theta)
    return g, theta, d_r, d_t


def dlms(u, crack: CrackParametrization | None = None, r: float = 0.5,
         n_boundary: int = DEFAULT_BOUNDARY_NODES, n_crack: int = DEFAULT_CRACK_NODES) -> IdentityReport:
    """``(1/r) H^1(S cap B_r) = int_{dB_r} (u_tau^2 - u_nu^2) + e(p).nu(p)``."""
    if not 0 < r <= 1:
        raise DomainError(f"radius must lie in (0, 1], got {r}")
    f, crack = _unpack_field(u, crack)

    def parts(nb, nc):
        length, _ = crack_length(crack, r, nc)
        g, theta, d_r, d_t = _circle(f, crack, r, nb)
        flux = float(integrate_samples((d_t ** 2 - d_r ** 2) * r, g))
        (px, py), (ex, ey) = exit_point(crack, r)
        return {"crack_length_over_r": length / r, "boundary": flux,
                "endpoint": (ex * px + ey * py) / r}

    fine, coarse = parts(n_boundary, n_crack), parts(_coarse(n_boundary), _coarse(n_crack))
    return IdentityReport("dlms", fine["crack_length_over_r"], fine["boundary"] + fine["endpoint"],
                          fine, _richardson(fine, coarse),
                          {"field": f.name, "radius": r, "n_boundary": n_boundary,
                           "n_crack": n_crack})


def am_identity(u, crack: CrackParametrization | None = None, r: float = 0.5,
                n_boundary: int = DEFAULT_BOUNDARY_NODES) -> IdentityReport:
    """``int_{dB_r \\ {p}} (|grad u|^2 nu.tau(p) + 2 u_nu grad u.(tau - tau(p))) = 0``.

    This is translation along ``tau(p)`` minus rotation over ``r``; the
    endpoint contributions cancel, so only one exit point is allowed
    (the crack is a graph over the radius by construction).
    """
    if not 0 < r <= 1:
        raise DomainError(f"radius must lie in (0, 1], got {r}")
    f, crack = _unpack_field(u, crack)

    def value(nb):
        g, theta, d_r, d_t = _circle(f, crack, r, nb)
        a = crack(np.float64(r))
        # nu.tau(p) = sin(theta - a); tau.(tau - tau(p)) = 1 - cos(theta - a); nu.(tau - tau(p)) = -sin(theta - a)
        rel = theta - a
        dens = (d_r ** 2 + d_t ** 2) * np.sin(rel) + 2 * d_r * (d_t * (1 - np.cos(rel)) - d_r * np.sin(rel))
        return float(integrate_samples(dens * r, g))

    fine, coarse = value(n_boundary), value(_coarse(n_boundary))
    terms = {"boundary": fine}
    return IdentityReport("am", fine, 0.0, terms, _richardson(terms, {"boundary": coarse}),
                          {"field": f.name, "radius": r, "n_boundary": n_boundary})


def am_polar_form(w, crack: CrackParametrization | None = None, r: float = 0.5,
                  orientation: int = -1, n_boundary: int = DEFAULT_BOUNDARY_NODES) -> IdentityReport:
    """``A - B`` for the conjugate ``w`` (zero on the crack), in angles relative to ``p``.

    ``A = int (r w_r^2 - w_phi^2 / r) sin(phi) dphi`` and
    ``B = 2 int w_r w_phi (1 + orientation cos(phi)) dphi``.  The
    conjugate rewrite of :func:`am_identity` produces ``orientation = -1``.
    """
    if orientation not in (-1, 1):
        raise DomainError("orientation must be +1 or -1")
    f, crack = _unpack_field(w, crack)

    def parts(nb):
        g, theta, d_r, d_t = _circle(f, crack, r, nb)
        rel = theta - crack(np.float64(r))
        w_phi = r * d_t
        A = integrate_samples((r * d_r ** 2 - w_phi ** 2 / r) * np.sin(rel), g)
        B = 2 * integrate_samples(d_r * w_phi * (1 + orientation * np.cos(rel)), g)
        return {"A": float(A), "B": float(B)}

    fine, coarse = parts(n_boundary), parts(_coarse(n_boundary))
    return IdentityReport("am_polar", fine["A"], fine["B"], fine, _richardson(fine, coarse),
                          {"field": f.name, "radius": r, "orientation": orientation})


# --------------------------------------------------------------------------
# fields with a displaced tip


def translated(field, shift: tuple[float, float]) -> PolarField:
    """``x -> field(x - shift)`` with the branch cut along the shifted crack."""
    f = as_field(field)
    sx, sy = shift

    def local(r, theta):
        x, y = r * np.cos(theta) - sx, r * np.sin(theta) - sy
        return np.hypot(x, y), np.mod(np.arctan2(y, x), 2 * np.pi)

    def value(r, theta):
        return f.value(*local(r, theta))

    def grad(r, theta):
        gx, gy = f.grad_cartesian(*local(r, theta))
        c, s = np.cos(theta), np.sin(theta)
        return gx * c + gy * s, -gx * s + gy * c

    return PolarField(f"{f.name}@({sx:g},{sy:g})", value, grad)


def horizontal_crack(height: float) -> CrackParametrization:
    """The ray ``{y = height, x > 0}`` as an angle ``alpha(r) = arcsin(height / r)`` for ``r > |height|``."""
    def alpha(r):
        return np.arcsin(height / np.asarray(r, dtype=float))

    def d1(r):
        r = np.asarray(r, dtype=float)
        return -height / (r * np.sqrt(r ** 2 - height ** 2))

    return CrackParametrization(alpha, d1)
