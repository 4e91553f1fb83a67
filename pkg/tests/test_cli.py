import csv
import json

import pytest

from cracktip import cli


def run_cli(tmp_path, *args, config=None):
    argv = ["--quiet", "--out-dir", str(tmp_path)]
    if config is not None:
        path = tmp_path / "config.yaml"
        path.write_text(config)
        argv += [args[0], "--config", str(path), *args[1:]]
    else:
        argv += list(args)
    return cli.main(argv)


def read_report(tmp_path, command):
    return json.loads((tmp_path / f"{command}.json").read_text())


def test_spectrum_csv(tmp_path):
    assert run_cli(tmp_path, "spectrum", "--k-max", "16") == 0
    with (tmp_path / "spectrum.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    assert rows[0]["k"] == "1" and float(rows[0]["nu"]) == 0.5
    assert 1.5 < float(rows[1]["nu"]) < 2
    report = read_report(tmp_path, "spectrum")
    assert report["schema_version"] == cli.SCHEMA_VERSION and report["passed"]
    assert all("error_estimate" in m["nu"] for m in report["results"]["modes"])


def test_identities_dlms(tmp_path):
    assert run_cli(tmp_path, "identities", "--field", "rad", "--eta", "identity", "--radius", "0.5") == 0
    dl = read_report(tmp_path, "identities")["results"]["dlms"]
    assert dl["lhs"] == pytest.approx(1.0, abs=1e-7) and dl["rhs"] == pytest.approx(1.0, abs=1e-7)
    assert "error_estimate" in dl


def test_identities_custom_polynomial(tmp_path):
    cfg = "identities:\n  eta: polynomial\n  eta_x: [[2, 0, 1.0], [0, 1, -0.5]]\n  eta_y: [[1, 1, 2.0]]\n"
    assert run_cli(tmp_path, "identities", config=cfg) == 0
    var = read_report(tmp_path, "identities")["results"]["variation"]
    assert var["metadata"]["eta"] == "custom_polynomial"
    assert abs(var["residual"]) <= 1e-7


def test_identities_constant(tmp_path):
    assert run_cli(tmp_path, "identities", "--eta", "constant") == 0


def test_decay_growth(tmp_path):
    cfg = "modes:\n  2: [0.0, 1.0]\nexpect: implication_holds\n"
    assert run_cli(tmp_path, "decay", config=cfg) == 0
    res = read_report(tmp_path, "decay")["results"]
    assert res["verdict"] == "implication_holds"
    assert all("error_estimate" in v for v in res["values"])


def test_decay_wrong_expectation_fails(tmp_path):
    assert run_cli(tmp_path, "decay", "--expect", "hypothesis_false") == 1


def test_evolve(tmp_path):
    assert run_cli(tmp_path, "evolve", "--stride", "16") == 0
    res = read_report(tmp_path, "evolve")["results"]
    assert res["derivative_source"] == "analytic"
    assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "lambda.csv").exists()


@pytest.mark.parametrize("function", ["zeta0", "mode:3", "random", "phi_sin3"])
def test_expand(tmp_path, function):
    assert run_cli(tmp_path, "expand", "--function", function, "--n-phi", "513") == 0


def test_linearize_check_reports_exponents(tmp_path):
    code = run_cli(tmp_path, "linearize-check", "--deltas", "0.01", "0.005", "0.0025")
    rep = read_report(tmp_path, "linearize-check")
    assert rep["assertions"]["exponent_pde"] and rep["assertions"]["control_detected"]
    # Dirichlet residual vanishes identically and transmission is third order
    assert not rep["assertions"]["exponent_bc"] and not rep["assertions"]["exponent_transmission"]
    assert code == 1


@pytest.mark.parametrize("args,config", [
    (("spectrum",), "bogus: 1\n"),
    (("spectrum", "--n-phi", "3"), None),
    (("decay",), "which: F\n"),
    (("identities",), "eta: spiral\n"),
    (("linearize-check", "--deltas", "0.5", "0.1"), None),
    (("spectrum",), "[1, 2]\n"),
])
def test_config_errors(tmp_path, args, config):
    assert run_cli(tmp_path, *args, config=config) == 2


def test_mode_outside_truncation_is_a_config_error(tmp_path):
    assert run_cli(tmp_path, "expand", "--function", "mode:40", "--K", "8") == 2


def test_numerical_failure_exit_code(tmp_path):
    # a growing coefficient this large overflows on the time grid
    assert run_cli(tmp_path, "evolve", config="modes:\n  2: [0.0, 1.0e300]\nt1: 200.0\n") == 3


def test_determinism(tmp_path):
    payloads = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        cli.main(["--quiet", "--seed", "7", "--out-dir", str(out), "expand", "--function", "random",
                  "--n-phi", "257"])
        data = read_report(out, "expand")
        data.pop("wall_time")
        payloads.append(json.dumps(data, sort_keys=True))
    assert payloads[0] == payloads[1]


def test_seed_changes_random_inputs(tmp_path):
    coeffs = []
    for seed in ("1", "2"):
        out = tmp_path / seed
        cli.main(["--quiet", "--seed", seed, "--out-dir", str(out), "expand", "--function", "random",
                  "--n-phi", "257"])
        coeffs.append(read_report(out, "expand")["results"]["coefficients"])
    assert coeffs[0] != coeffs[1]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["--quiet", "spectrum", "--k-max", "3"]) == 0
    assert (tmp_path / "env" / "spectrum.json").exists()


def test_config_section_and_flag_precedence(tmp_path):
    cfg = "spectrum:\n  k_max: 5\n"
    assert run_cli(tmp_path, "spectrum", "--k-max", "4", config=cfg) == 0
    assert read_report(tmp_path, "spectrum")["config"]["k_max"] == 4
    assert run_cli(tmp_path, "spectrum", config=cfg) == 0
    assert read_report(tmp_path, "spectrum")["config"]["k_max"] == 5
