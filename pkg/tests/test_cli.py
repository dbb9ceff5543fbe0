"""Tests for the click CLI."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from minefair.cli import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TWO = str(CONFIGS / "two_miners.json")
FAST = ["--trim", "5", "--window", "50"]


@pytest.fixture(autouse=True)
def isolated_config(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    cfg_path = tmp_path / "global.toml"
    monkeypatch.setattr("minefair.config.GLOBAL_CONFIG_PATH", cfg_path)
    monkeypatch.setattr("minefair.config.PROJECT_CONFIG_PATH", tmp_path / "project.toml")
    monkeypatch.setattr("minefair.cli.GLOBAL_CONFIG_PATH", cfg_path)
    monkeypatch.setattr("minefair.cli.PROJECT_CONFIG_PATH", tmp_path / "project.toml")
    return cfg_path


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _error(result) -> dict:
    assert result.exit_code == 1
    return json.loads(result.output.strip().splitlines()[-1])["error"]


def test_calc_two_miners(runner: CliRunner):
    result = runner.invoke(cli, ["calc", "--config", TWO])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert set(data) == {"pi", "reward_rates", "lf1", "lf2", "gf1", "gf2", "iterations", "residual"}
    assert data["lf1"][0] == pytest.approx(-0.0161905, abs=1e-6)
    assert data["pi"][0] == pytest.approx(0.291674, abs=1e-6)


def test_calc_csv_and_out_file(runner: CliRunner, tmp_path: Path):
    out = tmp_path / "report.csv"
    result = runner.invoke(cli, ["calc", "--config", TWO, "--format", "csv", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["miner"] for r in rows] == ["0", "1"]
    assert list(rows[0]) == ["miner", "alpha", "pi", "reward_rate", "lf1", "lf2"]


def test_calc_default_ten_miner_network(runner: CliRunner):
    result = runner.invoke(cli, ["calc", "--rule", "random"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert len(data["pi"]) == 10
    assert sum(data["lf1"]) == pytest.approx(0.0, abs=1e-9)


def test_calc_output_is_deterministic(runner: CliRunner):
    a = runner.invoke(cli, ["calc", "--config", str(CONFIGS / "ten_miners.json")])
    b = runner.invoke(cli, ["calc", "--config", str(CONFIGS / "ten_miners.json")])
    assert a.exit_code == 0
    assert a.output == b.output


def test_baseline(runner: CliRunner):
    result = runner.invoke(cli, ["baseline", "--config", TWO])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["pi"] == pytest.approx([0.3, 0.7])
    assert data["iterations"] == 0


def test_simulate_with_histogram(runner: CliRunner, tmp_path: Path):
    hist = tmp_path / "hist.csv"
    result = runner.invoke(
        cli,
        ["simulate", "--config", TWO, "--rounds", "500", "--seed", "3", *FAST, "--histogram", str(hist)],
    )
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["seed"] == 3
    assert data["total_rounds"] == 500
    assert sum(data["round_starts"]) == 500
    assert sum(data["fairness"]["lf1"]) == pytest.approx(0.0, abs=1e-12)
    rows = list(csv.DictReader(io.StringIO(hist.read_text())))
    assert sum(int(r["count"]) for r in rows) == 500
    assert set(rows[0]) == {"scale", "count", "starter_0", "starter_1"}


def test_compare_and_determinism(runner: CliRunner):
    args = ["compare", "--config", TWO, "--rounds", "500", "--seeds", "1-2", *FAST]
    a = runner.invoke(cli, args)
    b = runner.invoke(cli, args)
    assert a.exit_code == 0, a.output
    assert a.output == b.output
    data = json.loads(a.output)
    assert data["seeds"] == [1, 2]
    assert "err_lf1_mean" in data["summary"]

    c = runner.invoke(cli, [*args, "--format", "csv"])
    header = c.output.splitlines()[0].split(",")
    assert header[0] == "seed" and "baseline_err_lf2" in header


def test_sweep_csv(runner: CliRunner):
    result = runner.invoke(
        cli,
        ["sweep", "--config", TWO, "--grid", "0.05,0.1", "--rules", "first-seen,last-generated",
         "--rounds", "300", "--seeds", "1", *FAST, "--format", "csv"],
    )
    assert result.exit_code == 0, result.output
    rows = list(csv.DictReader(io.StringIO(result.output)))
    assert [(r["d_over_t"], r["rule"]) for r in rows] == [
        ("0.05", "first-seen"), ("0.05", "last-generated"),
        ("0.1", "first-seen"), ("0.1", "last-generated"),
    ]


def test_forkscale_default_grid(runner: CliRunner):
    result = runner.invoke(cli, ["forkscale"])
    assert result.exit_code == 0, result.output
    rows = list(csv.DictReader(io.StringIO(result.output)))
    assert [float(r["d_over_t"]) for r in rows] == [0.01, 0.1, 0.5]
    assert float(rows[1]["i3_over_i2"]) == pytest.approx(0.0517091, rel=1e-4)


def test_forkscale_per_miner(runner: CliRunner):
    result = runner.invoke(cli, ["forkscale", "--config", TWO, "--format", "json"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert [r["miner"] for r in data] == [0, 1]
    assert data[0]["t_weighted"] == pytest.approx(0.7 * 60.0)


def test_two_miner(runner: CliRunner):
    result = runner.invoke(cli, ["two-miner", "--alpha-a", "0.3", "--d-over-t", "0.1"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["f"] == pytest.approx(0.0951626, abs=1e-7)
    assert data["lf1_a"] == pytest.approx(-0.0161905, abs=1e-6)


def test_errors_are_json(runner: CliRunner, tmp_path: Path):
    err = _error(runner.invoke(cli, ["two-miner", "-a", "1.5", "-x", "0.1"]))
    assert err["type"] == "ValueError"
    assert "alpha_a" in err["message"]

    err = _error(runner.invoke(cli, ["calc", "--config", str(tmp_path / "missing.json")]))
    assert err["type"] == "ModelError"

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "n": 2, "alpha": [0.5, 0.6], "delays": {"constant": 1.0}, "mean_interval": 600,
    }))
    err = _error(runner.invoke(cli, ["calc", "--config", str(bad)]))
    assert err["type"] == "ModelError"
    assert "hashrate sum" in err["message"]

    err = _error(runner.invoke(cli, ["calc", "--config", TWO, "--max-iter", "1", "--epsilon", "1e-15"]))
    assert err["type"] == "ConvergenceError"


def test_config_set_get_list(runner: CliRunner, isolated_config: Path):
    result = runner.invoke(cli, ["config", "set", "simulation.rounds", "1234"])
    assert result.exit_code == 0, result.output

    result = runner.invoke(cli, ["config", "get", "simulation.rounds"])
    assert result.output.strip() == "1234"

    result = runner.invoke(cli, ["config", "list", "--global"])
    assert "rounds = 1234" in result.output

    err = _error(runner.invoke(cli, ["config", "get", "simulation.nope"]))
    assert err["type"] == "KeyError"
    assert err["message"] == "Unknown config key: simulation.nope"


def test_config_drives_defaults(runner: CliRunner):
    runner.invoke(cli, ["config", "set", "output.format", "csv"])
    result = runner.invoke(cli, ["two-miner", "-a", "0.3", "-x", "0.1"])
    assert result.output.splitlines()[0] == "f,pi_a,pi_b,w_ab,w_ba,lf1_a,lf1_b"


def test_forkscale_huge_delay(runner: CliRunner):
    result = runner.invoke(cli, ["forkscale", "--grid", "800"])
    assert result.exit_code == 0, result.output
    row = next(csv.DictReader(io.StringIO(result.output)))
    assert float(row["i3_over_i2"]) == float("inf")
