"""Command-line front end: subcommands, CSV outputs, exit codes."""

import json
import subprocess
import sys

import pytest

from nomadas import ALGORITHMS
from nomadas import cli
from nomadas.audit import AuditReport
from nomadas.cli import _parse_algorithms, build_parser, main
from nomadas.harness import read_aggregate_csv, read_trial_csv

DEFAULT_ALGS = ("OMA-DAS", "SRRH", "SRRH-LPO")


@pytest.fixture()
def config_json(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({
        "cell_radius_m": 500.0, "num_users": 6, "num_rrhs": 4,
        "num_subcarriers": 16, "bandwidth_hz": 10e6, "noise_psd": 4e-21,
        "rate_demand_bps": 3e6, "seed": 0}))
    return str(path)


def test_parse_algorithms_all():
    assert _parse_algorithms("all") == ALGORITHMS
    assert _parse_algorithms(" ALL ") == ALGORITHMS


def test_parse_algorithms_list():
    assert _parse_algorithms("OMA-DAS, SRRH") == ("OMA-DAS", "SRRH")


def test_parse_algorithms_unknown():
    with pytest.raises(SystemExit, match="unknown algorithm"):
        _parse_algorithms("SRRH-LP0")


def test_parser_requires_subcommand(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    assert "command" in capsys.readouterr().err


def test_simulate_writes_trials(tmp_path, config_json, capsys):
    out = tmp_path / "trials.csv"
    rc = main(["simulate", "--config", config_json, "--trials", "2",
               "--out", str(out)])
    assert rc == 0
    records = read_trial_csv(out)
    assert len(records) == 2 * len(DEFAULT_ALGS)
    assert {r.algorithm for r in records} == set(DEFAULT_ALGS)
    assert not any(r.failed for r in records)
    assert "mean" in capsys.readouterr().out


def test_simulate_rate_override_and_aggregate(tmp_path, config_json):
    out = tmp_path / "trials.csv"
    agg = tmp_path / "agg.csv"
    rc = main(["simulate", "--config", config_json, "--trials", "2",
               "--rate", "2e6", "--algorithms", "OMA-DAS",
               "--out", str(out), "--aggregate-out", str(agg)])
    assert rc == 0
    records = read_trial_csv(out)
    assert all(r.sweep_value == 2e6 for r in records)
    rows = read_aggregate_csv(agg)
    assert len(rows) == 1
    assert rows[0].n_trials == 2 and rows[0].n_failed == 0


def test_sweep_covers_all_values(tmp_path, config_json):
    out = tmp_path / "sweep.csv"
    agg = tmp_path / "agg.csv"
    rc = main(["sweep", "--config", config_json, "--axis", "users",
               "--values", "4,6", "--trials", "2",
               "--algorithms", "OMA-DAS,SRRH", "--out", str(out),
               "--aggregate-out", str(agg)])
    assert rc == 0
    records = read_trial_csv(out)
    assert len(records) == 2 * 2 * 2
    assert {r.sweep_value for r in records} == {4.0, 6.0}
    rows = read_aggregate_csv(agg)
    assert len(rows) == 4


def test_audit_clean_run_exits_zero(config_json, capsys):
    rc = main(["audit", "--config", config_json, "--trials", "2",
               "--algorithms", "all"])
    assert rc == 0
    assert "0 violations" in capsys.readouterr().out


def test_audit_violations_exit_nonzero(monkeypatch, config_json, capsys):
    def fake(scenario, algorithms, trials, base_seed=0):
        return AuditReport(1, (("SRRH", 0, "planted"),))

    monkeypatch.setattr(cli, "run_invariant_audit", fake)
    rc = main(["audit", "--config", config_json, "--trials", "1"])
    assert rc == 1
    assert "planted" in capsys.readouterr().out


def test_oracle_exits_zero(capsys):
    rc = main(["oracle", "--trials", "3"])
    assert rc == 0
    assert "0 failures" in capsys.readouterr().out


def test_module_entry_point(tmp_path, config_json):
    out = tmp_path / "trials.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "nomadas", "simulate", "--config",
         config_json, "--trials", "1", "--algorithms", "OMA-DAS",
         "--out", str(out)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert len(read_trial_csv(out)) == 1
