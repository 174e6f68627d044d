import json
from pathlib import Path

import numpy as np
import pytest

from relshock import cli
from relshock.config import ExperimentConfig, load_config_file
from relshock.errors import ConfigError

REPO = Path(__file__).resolve().parents[1]


def test_missing_epsilon_exits_2(tmp_path):
    rc = cli.main(["profile", "--flux", "burgers", "--u-minus", "1",
                   "--out", str(tmp_path)])
    assert rc == 2


def test_profile_golden_exit_0(tmp_path):
    rc = cli.main(["profile", "--flux", "burgers", "--u-minus", "1",
                   "--eps", "0.5", "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "profile_report.json").read_text())
    assert report["passed"]
    assert report["tanh_sup_error"] <= 1e-8
    lines = (tmp_path / "profile.csv").read_text().splitlines()
    assert lines[0].startswith("# config-hash: ")
    assert lines[1] == "xi,S,S_prime,S_double_prime,a,y"


def test_hypotheses_pass_and_fail(tmp_path):
    rc = cli.main(["hypotheses", "--flux", "quartic", "--entropy", "remark12",
                   "--theta", "1", "--out", str(tmp_path / "a")])
    assert rc == 0
    rep = json.loads((tmp_path / "a" / "hypotheses_report.json").read_text())
    assert rep["alpha_est"] == 2.0
    rc = cli.main(["hypotheses", "--flux", "burgers", "--entropy", "quadratic",
                   "--theta", "1", "--out", str(tmp_path / "b")])
    assert rc == 1


def test_poincare_expectations(tmp_path):
    rc = cli.main(["poincare", "--delta", "0.001", "--trials", "500",
                   "--out", str(tmp_path / "a")])
    assert rc == 0
    rc = cli.main(["poincare", "--delta", "10", "--trials", "200",
                   "--expect", "positive", "--out", str(tmp_path / "b")])
    assert rc == 0
    rc = cli.main(["poincare", "--delta", "10", "--trials", "200",
                   "--out", str(tmp_path / "c")])
    assert rc == 1  # nonpositive expected but a counterexample exists


def test_sweep_quick(tmp_path):
    rc = cli.main(["sweep", "--flux", "quartic", "--entropy", "remark12",
                   "--u-minus", "1", "--eps-list", "0.1,0.05",
                   "--out", str(tmp_path)])
    assert rc == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[1].split(",")[0] == "eps"
    rep = json.loads((tmp_path / "sweep_report.json").read_text())
    assert rep["passed"]


def test_contract_quick_and_deterministic(tmp_path):
    args = ["contract", "--flux", "quartic", "--entropy", "remark12",
            "--u-minus", "1", "--eps", "0.05", "--lambda", "0.25",
            "--points", "1601", "--T", "0.5", "--cadence", "0.05",
            "--kind", "rough", "--amplitude", "0.4", "--seed", "3"]
    rc1 = cli.main(args + ["--out", str(tmp_path / "r1")])
    rc2 = cli.main(args + ["--out", str(tmp_path / "r2")])
    assert rc1 == 0 and rc2 == 0
    a = (tmp_path / "r1" / "snapshots.csv").read_bytes()
    b = (tmp_path / "r2" / "snapshots.csv").read_bytes()
    assert a == b
    fa = (tmp_path / "r1" / "fields.csv").read_bytes()
    fb = (tmp_path / "r2" / "fields.csv").read_bytes()
    assert fa == fb
    header = a.decode().splitlines()[1].split(",")
    assert header == (["t", "X", "Xdot", "Y"] + [f"B{i}" for i in range(1, 9)]
                      + ["B_total", "G0", "D", "R_main", "weighted_entropy"])


def test_config_file_with_flag_override(tmp_path):
    cfg_file = tmp_path / "exp.toml"
    cfg_file.write_text(
        'flux = "burgers"\nentropy = "quadratic"\nu_minus = 1.0\n'
        'epsilon = 0.5\nlambda = 0.25\nassert_theorem = false\n'
        '[perturbation]\nkind = "bump"\namplitude = 0.1\n')
    data = load_config_file(str(cfg_file))
    cfg = ExperimentConfig.from_dict(data)
    assert cfg.epsilon == 0.5 and cfg.perturbation["amplitude"] == 0.1
    # flag overrides the file value
    rc = cli.main(["profile", "--config", str(cfg_file), "--eps", "0.25",
                   "--out", str(tmp_path / "o")])
    assert rc == 0
    rep = json.loads((tmp_path / "o" / "profile_report.json").read_text())
    assert rep["u_plus"] == pytest.approx(0.75)


def test_repo_example_configs_parse():
    for name in ("contract_quartic.toml", "identity_burgers.toml",
                 "identity_quartic.toml"):
        cfg = ExperimentConfig.from_dict(
            load_config_file(str(REPO / "configs" / name)))
        cfg.validate()


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("epsilon = [unclosed\n")
    rc = cli.main(["profile", "--config", str(bad), "--out", str(tmp_path)])
    assert rc == 2
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "missing.toml"))


def test_unknown_config_key():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"flux": "burgers", "banana": 1})


def test_config_invariants():
    base = {"flux": "quartic", "entropy": "remark12", "u_minus": 1.0,
            "epsilon": 0.05, "lambda": 0.25}
    ExperimentConfig.from_dict(base).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "epsilon": -1.0}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "lambda": 1.5}).validate()
    with pytest.raises(ConfigError):  # theorem regime: eps/lambda < delta0
        ExperimentConfig.from_dict({**base, "epsilon": 0.2}).validate()
    with pytest.raises(ConfigError):  # lambda < delta0 in theorem regime
        ExperimentConfig.from_dict({**base, "lambda": 0.4,
                                    "delta0": 0.3}).validate()
    with pytest.raises(ConfigError):  # too few cells across the shock
        ExperimentConfig.from_dict({**base, "points": 201}).validate()
    with pytest.raises(ConfigError):  # domain too short for the tails
        ExperimentConfig.from_dict({**base, "half_width": 100.0}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(
            {**base, "perturbation": {"kind": "sawtooth"}}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(
            {**base, "shift_integrator": "rk4"}).validate()


def test_poly_funcspec_flag(tmp_path):
    rc = cli.main(["profile", "--flux", "poly:0,0,0.5", "--u-minus", "1",
                   "--eps", "0.5", "--out", str(tmp_path)])
    assert rc == 0


def test_config_hash_ignores_outdir():
    a = ExperimentConfig.from_dict({"flux": "burgers", "outdir": "x"})
    b = ExperimentConfig.from_dict({"flux": "burgers", "outdir": "y"})
    assert a.config_hash() == b.config_hash()
    c = ExperimentConfig.from_dict({"flux": "quartic", "outdir": "x"})
    assert a.config_hash() != c.config_hash()


def test_float_formatting_17_digits():
    assert cli._fmt(1.0 / 3.0) == "0.33333333333333331"
