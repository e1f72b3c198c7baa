import csv
import subprocess
import sys

import pytest
import yaml

from nlc.cli import build_parser, main
from nlc.config import ConfigError, config_from_mapping, load_config
from nlc.sweep import RATES_COLUMNS, SLOPES_COLUMNS, SweepConfig, sweep_lambda

SMALL = dict(lambdas=(4.0, 8.0, 16.0), sizes=(16, 16), t_end=0.01, floor_probe=False)


def test_config_keys(tmp_path):
    raw = {
        "gamma": 1.4,
        "mu": 0.5,
        "kappa": 0.1,
        "nu": 2,
        "theta": 3,
        "lambda": [10, 20, 40],
        "delta0": 0.01,
        "seed": 7,
        "s": 2,
        "grid": {"sizes": [32, 32]},
        "init.profile": "rest",
    }
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(raw))
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.gamma == 1.4 and cfg.mu == 0.5 and cfg.kappa == 0.1 and cfg.nu == 2.0 and cfg.theta == 3.0
    assert cfg.lambdas == (10.0, 20.0, 40.0) and cfg.delta0 == 0.01 and cfg.seed == 7 and cfg.s == 2
    assert cfg.sizes == (32, 32) and cfg.profile == "rest"
    assert config_from_mapping({"lambda": 5}).lambdas == (5.0,)


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError, match="grid.size"):
        config_from_mapping({"grid": {"size": [8, 8]}})


def test_default_step_resolves_fastest_acoustic_mode():
    cfg = SweepConfig()
    dt = cfg.step_size()
    assert round(cfg.t_end / dt) * dt == pytest.approx(cfg.t_end)
    assert dt * 160 * 2**0.5 * 4 * 2**0.5 <= 0.1 + 1e-12


def test_small_sweep_writes_outputs(tmp_path):
    rep = sweep_lambda(SweepConfig(**SMALL), tmp_path)
    rates = list(csv.reader((tmp_path / "rates.csv").open()))
    slopes = list(csv.reader((tmp_path / "slopes.csv").open()))
    assert tuple(rates[0]) == RATES_COLUMNS and len(rates) == 4
    assert tuple(slopes[0]) == SLOPES_COLUMNS and len(slopes) == 6
    for lam in ("4p0", "8p0", "16p0"):
        assert (tmp_path / f"observer_compressible_lambda_{lam}.csv").exists()
        assert (tmp_path / f"observer_incompressible_lambda_{lam}.csv").exists()
    e = rep.fitted_slopes["E_combined"]
    assert e["ci_low"] <= e["slope"] <= e["ci_high"]
    assert rep.expected_slopes["grad_rho_hs2"] == -4.0


def test_repeated_lambda_gives_identical_rows():
    rep = sweep_lambda(SweepConfig(**{**SMALL, "lambdas": (8.0, 8.0, 16.0)}))
    assert rep.rows[0] == rep.rows[1]


def test_failed_lambda_gives_partial_report(tmp_path):
    cfg = SweepConfig(**{**SMALL, "lambdas": (1.0, 64.0, 128.0, 256.0), "delta0": 100.0})
    rep = sweep_lambda(cfg, tmp_path)
    assert 1.0 in rep.failed and rep.rows[0] is None
    assert rep.fitted_slopes["E_combined"]["n_points"] == 3
    first = list(csv.reader((tmp_path / "rates.csv").open()))[1]
    assert first[0] == "1.0" and all(v == "nan" for v in first[1:])


def test_help_documents_defaults(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sweep-lambda", "--help"])
    out = capsys.readouterr().out
    for key in ("gamma", "lambda", "delta0", "grid.sizes", "init.profile"):
        assert key in out


def test_cli_sweep(tmp_path):
    (tmp_path / "c.yaml").write_text(yaml.safe_dump({"lambda": [4, 8, 16], "grid": {"sizes": [16, 16]}, "t_end": 0.01, "floor_probe": False}))
    assert main(["sweep-lambda", "--config", str(tmp_path / "c.yaml"), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "slopes.csv").exists()


def test_cli_contraction(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["check-contraction", "--out", str(out), "--grid", "16", "--T0", "0.01", "0.005", "--steps", "10"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert set(r["T0"] for r in rows) == {"0.01", "0.005"}
    assert list(rows[0]) == ["T0", "lambda", "iter", "diff_metric", "ratio"]


def test_console_script_verify_identities():
    r = subprocess.run(
        [sys.executable, "-m", "nlc.cli", "verify-identities", "--grid", "64", "--dt", "1e-3", "--t-end", "0.01"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    assert "PASS" in r.stdout
