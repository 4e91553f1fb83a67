"""Command-line entry point: ``cracktip <command> [--config FILE] [flags]``.

Every command writes a JSON report (sorted keys, versioned schema) and,
where there is tabular data, CSV files into the output directory.  The
exit status is 0 when every assertion of the run passes, 1 when one
fails, 2 for a bad configuration and 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import annuli, expansion, identities, linearized, nonlinear, spectrum
from .errors import ConfigError, CracktipError
from .fields import CrackParametrization
from .numerics import MIN_NODES, CylinderGrid, angular_grid

SCHEMA_VERSION = "1.0"
OUTPUT_ENV = "CRACKTIP_OUTPUT_DIR"
DEFAULT_OUTPUT = "cracktip_out"
EXIT_OK, EXIT_ASSERTION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


# --------------------------------------------------------------------------
# configuration


@dataclass
class SpectrumConfig:
    k_max: int = 16
    n_phi: int = 2049
    root_tol: float = 1e-13


@dataclass
class ExpandConfig:
    function: str = "phi_sin3"   # zeta0 | zeta1 | mode:<k> | phi_sin3 | random
    K: int = 16
    n_phi: int = 2049
    tol: float = 1e-9


@dataclass
class EvolveConfig:
    modes: dict = field(default_factory=lambda: {2: [1.0, 0.0]})   # k -> [C, D]
    lambda_inf: float = 0.0
    t0: float = 0.0
    t1: float = 4.0
    n_phi: int = 513
    n_t: int = 401
    stride: int = 8
    tol: float = 1e-5


@dataclass
class IdentitiesConfig:
    field: str = "rad"
    eta: str = "identity"          # identity | rotation | z2 | translation | constant | polynomial
    eta_vector: list = dataclasses.field(default_factory=lambda: [1.0, 0.0])   # for eta = constant
    eta_x: list = dataclasses.field(default_factory=list)   # for eta = polynomial: [[a, b, c], ...] = sum c x^a y^b
    eta_y: list = dataclasses.field(default_factory=list)
    radius: float = 0.5
    crack_eps: float = 0.0
    n_bulk: int = 513
    n_boundary: int = 2049
    n_crack: int = 1025
    tol: float = 1e-7


@dataclass
class DecayConfig:
    modes: dict = field(default_factory=lambda: {2: [0.0, 1.0]})
    base: float = 0.0
    eta: float = 0.05
    c0: float = 0.01
    which: str = "E"
    condition: str = "printed"
    n_phi: int = 257
    n_t: int = 301
    expect: str | None = None


@dataclass
class LinearizeCheckConfig:
    modes: dict = field(default_factory=lambda: {2: [1.0, 0.0], 3: [0.5, 0.0]})
    deltas: list = field(default_factory=lambda: list(nonlinear.DEFAULT_DELTAS))
    t0: float = 0.0
    t1: float = 4.0
    n_phi: int = 513
    n_t: int = 401
    band: list = field(default_factory=lambda: [1.9, 2.1])
    control_max: float = 1.2


EXTRA_ETAS = ("translation", "constant", "polynomial")

CONFIGS = {
    "spectrum": SpectrumConfig,
    "expand": ExpandConfig,
    "evolve": EvolveConfig,
    "identities": IdentitiesConfig,
    "decay": DecayConfig,
    "linearize-check": LinearizeCheckConfig,
}


def load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return data


def build_config(command: str, file_values: dict, overrides: dict):
    """Defaults, then the config file, then command-line flags; unknown keys are rejected."""
    cls = CONFIGS[command]
    names = {f.name for f in dataclasses.fields(cls)}
    values = dict(file_values)
    section = values.pop(command, None)
    if isinstance(section, dict):
        values = {**values, **section}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def _modes(raw) -> dict[int, tuple[float, float]]:
    if not isinstance(raw, dict):
        raise ConfigError("modes must map k to [C, D]")
    out = {}
    for k, cd in raw.items():
        try:
            k = int(k)
            C, D = (float(x) for x in cd)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"mode {k!r}: expected [C, D]") from exc
        if k < 2:
            raise ConfigError(f"mode indices start at 2, got {k}")
        out[k] = (C, D)
    return out


def validate(cfg) -> None:
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if (f.name == "tol" or f.name.endswith("_tol")) and not (isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"{f.name} must be a positive number")
        if f.name.startswith("n_") and not (isinstance(v, int) and v >= MIN_NODES):
            raise ConfigError(f"{f.name} must be an integer >= {MIN_NODES}")
    if hasattr(cfg, "modes"):
        cfg.modes = _modes(cfg.modes)
    if isinstance(cfg, SpectrumConfig) and cfg.k_max < 1:
        raise ConfigError("k_max must be >= 1")
    if isinstance(cfg, ExpandConfig) and cfg.K < 2:
        raise ConfigError("K must be >= 2")
    if isinstance(cfg, EvolveConfig) and (cfg.t1 <= cfg.t0 or cfg.stride < 1):
        raise ConfigError("need t1 > t0 and stride >= 1")
    if isinstance(cfg, IdentitiesConfig):
        if cfg.field not in ("rad", "isq"):
            raise ConfigError("field must be rad or isq")
        if cfg.eta not in (*identities.ETA_CATALOG, *EXTRA_ETAS):
            raise ConfigError(f"eta must be one of {sorted(identities.ETA_CATALOG) + list(EXTRA_ETAS)}")
        if len(cfg.eta_vector) != 2:
            raise ConfigError("eta_vector must hold two numbers")
        for key in ("eta_x", "eta_y"):
            if any(len(m) != 3 or int(m[0]) < 0 or int(m[1]) < 0 for m in getattr(cfg, key)):
                raise ConfigError(f"{key} entries must be [a, b, coefficient] with a, b >= 0")
        if not 0 < cfg.radius <= 1:
            raise ConfigError("radius must lie in (0, 1]")
    if isinstance(cfg, DecayConfig):
        if cfg.which not in ("E", "G") or cfg.condition not in ("printed", "rederived"):
            raise ConfigError("which must be E|G and condition printed|rederived")
        if not 0 < cfg.eta < 1 or cfg.c0 <= 0:
            raise ConfigError("need 0 < eta < 1 and c0 > 0")
        if cfg.expect is not None and cfg.expect not in annuli.VERDICTS:
            raise ConfigError(f"expect must be one of {annuli.VERDICTS}")
    if isinstance(cfg, LinearizeCheckConfig):
        if any(not 0 < float(d) <= nonlinear.MAX_DELTA for d in cfg.deltas) or len(cfg.deltas) < 2:
            raise ConfigError(f"need at least two deltas in (0, {nonlinear.MAX_DELTA}]")


# --------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    command: str
    config: dict
    seed: int
    results: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def payload(self, with_time: bool = True) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "command": self.command, "config": self.config,
               "seed": self.seed, "results": self.results, "assertions": self.assertions,
               "passed": self.passed}
        if with_time:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, with_time: bool = True) -> str:
        return json.dumps(_jsonable(self.payload(with_time)), sort_keys=True, indent=2)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _estimate(value, error) -> dict:
    return {"value": value, "error_estimate": error}


def _write_csv(path: Path, header: list[str], rows) -> str:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path.name


# --------------------------------------------------------------------------
# commands


def run_spectrum(cfg: SpectrumConfig, out: Path, rng) -> tuple[dict, dict]:
    grid = angular_grid(cfg.n_phi)
    rows, results = [], []
    for k in range(1, cfg.k_max + 1):
        mode = spectrum.eigenvalue(k, grid, cfg.root_tol)
        lo, hi = (mode.bracket.a / np.pi, mode.bracket.b / np.pi) if mode.bracket else (0.5, 0.5)
        err = 0.0 if k == 1 else cfg.root_tol / np.pi
        c = mode.c if mode.c is not None else float("nan")
        rows.append((k, mode.nu, mode.mu, err, mode.psi_residual if k > 1 else 0.0, lo, hi, c))
        results.append({"k": k, "nu": _estimate(mode.nu, err), "bracket": [lo, hi]})
    files = [_write_csv(out / "spectrum.csv",
                        ["k", "nu", "mu", "nu_error", "psi_residual", "bracket_lo", "bracket_hi", "c_k"],
                        rows)]
    nu_vals = [r[1] for r in rows]
    checks = {
        "nu1_is_half": nu_vals[0] == 0.5,
        "nu_in_brackets": all(r[5] <= r[1] <= r[6] for r in rows),
        "nu_increasing": bool(np.all(np.diff(nu_vals) > 0)),
    }
    if cfg.k_max >= 2:
        checks["spectral_gap"] = nu_vals[1] - 0.5 > 1
    return {"modes": results, "files": files}, checks


def _expand_target(cfg: ExpandConfig, grid, rng):
    x = grid.nodes
    name = cfg.function
    if name == "zeta0":
        return spectrum.zeta0(grid).values, None
    if name == "zeta1":
        return spectrum.zeta1(grid).values, None
    if name.startswith("mode:"):
        k = int(name.split(":", 1)[1])
        if not 2 <= k <= cfg.K:
            raise ConfigError(f"mode index must lie in [2, K], got {k}")
        return spectrum.basis_function(k, grid).values, None
    if name == "phi_sin3":
        return (x - np.pi) * np.sin(1.5 * x), None
    if name == "random":
        c = expansion.random_coefficients(rng, cfg.K)
        return expansion.reconstruct_samples(c.as_array(), grid), c.as_array()
    raise ConfigError(f"unknown function {name!r}")


def run_expand(cfg: ExpandConfig, out: Path, rng) -> tuple[dict, dict]:
    fine = angular_grid(cfg.n_phi)
    values, exact = _expand_target(cfg, fine, rng)
    a = expansion.expand_samples(values, fine, cfg.K)
    # grid-halving estimate, on every other node of the same samples
    coarse = angular_grid((cfg.n_phi + 1) // 2)
    a_coarse = expansion.expand_samples(values[::2], coarse, cfg.K)
    err = np.abs(a - a_coarse)
    rest = values - expansion.reconstruct_samples(a, fine)
    trunc = expansion._h1(rest, fine)
    nus_ = expansion.nu_table(cfg.K)
    files = [_write_csv(out / "coefficients.csv", ["k", "a_k", "error_estimate", "nu_k"],
                        [(k, a[k], err[k], nus_[k]) for k in range(cfg.K + 1)])]
    results = {"coefficients": [_estimate(a[k], err[k]) for k in range(cfg.K + 1)],
               "truncation_error_h1": trunc, "files": files}
    checks = {"finite": bool(np.all(np.isfinite(a)))}
    if exact is not None:
        results["round_trip_error"] = float(np.max(np.abs(a - exact)))
        checks["round_trip"] = results["round_trip_error"] <= cfg.tol
    elif cfg.function != "phi_sin3":
        checks["in_span"] = trunc <= cfg.tol
    return results, checks


def _modal(modes: dict, lambda_inf: float = 0.0) -> linearized.ModalSolution:
    return linearized.ModalSolution(
        modes, linearized.SlowBlock(p=-lambda_inf / linearized.SQRT_2PI))


def run_evolve(cfg: EvolveConfig, out: Path, rng) -> tuple[dict, dict]:
    grid = CylinderGrid.make(cfg.t0, cfg.t1, cfg.n_phi, cfg.n_t)
    traj = _modal(cfg.modes, cfg.lambda_inf).trajectory(grid)
    res = linearized.lineare_residual(traj).max_abs()
    vres = linearized.ventsel_residual(traj).max_abs()
    s = cfg.stride
    phi, t = grid.phi.nodes[::s], grid.t.nodes[::s]
    P, T = np.meshgrid(phi, t, indexing="ij")
    files = [
        _write_csv(out / "trajectory.csv", ["phi", "t", "v"],
                   zip(P.ravel(), T.ravel(), traj.v[::s, ::s].ravel())),
        _write_csv(out / "lambda.csv", ["t", "lambda", "lambda_dot", "lambda_ddot"],
                   zip(grid.t.nodes, traj.lam, traj.lam_dot, traj.lam_ddot)),
    ]
    results = {"residuals": res, "ventsel_residuals": vres, "files": files,
               "derivative_source": traj.derivative_source}
    checks = {f"residual_{k}": v <= cfg.tol for k, v in res.items()}
    decaying = all(D == 0.0 for C, D in cfg.modes.values()) and cfg.lambda_inf == 0.0
    if decaying and cfg.modes:
        kmin = min(k for k, (C, D) in cfg.modes.items() if C != 0.0)
        expected = -(spectrum.nu(kmin) - 0.5)
        mid = 0.5 * (cfg.t0 + cfg.t1)
        rate = linearized.decay_rate(traj, (mid, cfg.t1))
        rate_half = linearized.decay_rate(traj, (0.5 * (mid + cfg.t1), cfg.t1))
        results["decay_rate"] = _estimate(rate, abs(rate - rate_half))
        results["expected_rate"] = expected
        checks["decay_rate_1pct"] = abs(rate - expected) <= 0.01 * abs(expected)
    return results, checks


def _identity_inputs(cfg: IdentitiesConfig):
    crack = CrackParametrization.linear(cfg.crack_eps) if cfg.crack_eps else CrackParametrization.straight()
    if cfg.eta == "translation":
        _, (ex, ey) = identities.exit_point(crack, cfg.radius)
        eta = identities.constant_field(ex, ey)
    elif cfg.eta == "constant":
        eta = identities.constant_field(*(float(v) for v in cfg.eta_vector))
    elif cfg.eta == "polynomial":
        coeffs = [{(int(a), int(b)): float(c) for a, b, c in getattr(cfg, key)} for key in ("eta_x", "eta_y")]
        eta = identities.polynomial_field(*coeffs, name="custom_polynomial")
    else:
        eta = identities.ETA_CATALOG[cfg.eta]()
    return crack, eta


def run_identities(cfg: IdentitiesConfig, out: Path, rng) -> tuple[dict, dict]:
    crack, eta = _identity_inputs(cfg)
    kw = dict(n_boundary=cfg.n_boundary)
    reports = {
        "variation": identities.boundary_variation_report(cfg.field, crack, cfg.radius, eta,
                                                          cfg.n_bulk, cfg.n_boundary, cfg.n_crack),
        "dlms": identities.dlms(cfg.field, crack, cfg.radius, n_crack=cfg.n_crack, **kw),
        "am": identities.am_identity(cfg.field, crack, cfg.radius, **kw),
    }
    results = {k: r.as_dict() for k, r in reports.items()}
    for r in results.values():
        r["metadata"].pop("coarse_terms", None)
    checks = {}
    if cfg.field == "rad" and cfg.crack_eps == 0.0:
        # exact critical point: every identity closes up to quadrature
        for k, r in reports.items():
            checks[f"{k}_residual"] = abs(r.residual) <= max(cfg.tol, 10 * r.error_estimate)
        checks["dlms_equals_one"] = abs(reports["dlms"].lhs - 1) <= cfg.tol \
            and abs(reports["dlms"].rhs - 1) <= cfg.tol
    else:
        checks["finite"] = all(np.isfinite(r.residual) for r in reports.values())
    return results, checks


def run_decay(cfg: DecayConfig, out: Path, rng) -> tuple[dict, dict]:
    modal = _modal(cfg.modes)
    traj = modal.trajectory(CylinderGrid.make(cfg.base, cfg.base + 3, cfg.n_phi, cfg.n_t))
    verdict = annuli.three_annuli_check(traj, cfg.base, cfg.eta, cfg.c0, cfg.which, cfg.condition)
    # the sampled (expanded, differenced) path against the analytic one
    errs = []
    for a in verdict.annuli:
        fd = annuli.energies(traj, *a.interval, cfg.c0, path="finite-difference")
        errs.append(abs(fd.value(cfg.which) - a.value(cfg.which)))
    results = verdict.as_dict()
    results["values"] = [_estimate(v, e) for v, e in zip(verdict.values, errs)]
    checks = {"no_violation": verdict.verdict != "VIOLATION"}
    if cfg.expect is not None:
        checks["expected_verdict"] = verdict.verdict == cfg.expect
    return results, checks


def run_linearize_check(cfg: LinearizeCheckConfig, out: Path, rng) -> tuple[dict, dict]:
    grid = CylinderGrid.make(cfg.t0, cfg.t1, cfg.n_phi, cfg.n_t)
    traj = _modal(cfg.modes).trajectory(grid)
    table = nonlinear.linearization_consistency(traj, cfg.deltas)
    control = nonlinear.linearization_consistency(nonlinear.flipped_sign_mode(grid), cfg.deltas)
    lo, hi = cfg.band
    rows = [(d, *(table.residuals[k][i] for k in ("pde", "bc", "transmission")))
            for i, d in enumerate(table.deltas)]
    files = [_write_csv(out / "consistency.csv", ["delta", "pde", "bc", "transmission"], rows)]
    results = {"solution": table.as_dict(), "control": control.as_dict(),
               "linear_residuals": linearized.lineare_residual(traj).max_abs(), "files": files}
    checks = {f"exponent_{k}": bool(lo <= p <= hi) for k, p in table.exponents.items()}
    checks["control_detected"] = bool(control.exponents["transmission"] <= cfg.control_max)
    return results, checks


RUNNERS = {
    "spectrum": run_spectrum,
    "expand": run_expand,
    "evolve": run_evolve,
    "identities": run_identities,
    "decay": run_decay,
    "linearize-check": run_linearize_check,
}


def run(command: str, cfg, out_dir: Path, seed: int = 0) -> RunReport:
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    results, checks = RUNNERS[command](cfg, out_dir, rng)
    report = RunReport(command, dataclasses.asdict(cfg), seed, results,
                       {k: bool(v) for k, v in checks.items()}, time.perf_counter() - start)
    (out_dir / f"{command}.json").write_text(report.to_json() + "\n")
    return report


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cracktip", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="seed for every randomized input")
    p.add_argument("--out-dir", default=None,
                   help=f"output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    p.add_argument("--quiet", action="store_true", help="do not echo the report")
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", default=None, help="YAML config file")
        return s

    s = cmd("spectrum", "eigenvalues nu_k and normalizations")
    s.add_argument("--k-max", dest="k_max", type=int)
    s.add_argument("--n-phi", dest="n_phi", type=int)
    s = cmd("expand", "mode coefficients of an odd test function")
    s.add_argument("--function")
    s.add_argument("--K", dest="K", type=int)
    s.add_argument("--n-phi", dest="n_phi", type=int)
    s = cmd("evolve", "synthesize a linear trajectory from mode coefficients")
    s.add_argument("--t0", type=float)
    s.add_argument("--t1", type=float)
    s.add_argument("--stride", type=int)
    s = cmd("identities", "inner-variation identities on a disk")
    s.add_argument("--field")
    s.add_argument("--eta")
    s.add_argument("--radius", type=float)
    s.add_argument("--crack-eps", dest="crack_eps", type=float)
    s = cmd("decay", "three-annuli dichotomy on a modal solution")
    s.add_argument("--which")
    s.add_argument("--condition")
    s.add_argument("--eta", type=float)
    s.add_argument("--c0", type=float)
    s.add_argument("--expect")
    s = cmd("linearize-check", "first-variation consistency against the full system")
    s.add_argument("--deltas", type=float, nargs="+")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("seed", "out_dir", "quiet", "command", "config")}
    out_dir = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    try:
        cfg = build_config(args.command, load_config_file(args.config), overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            report = run(args.command, cfg, out_dir, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CracktipError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not args.quiet:
        print(report.to_json())
    return EXIT_OK if report.passed else EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
