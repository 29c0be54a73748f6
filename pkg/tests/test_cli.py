"""End-to-end tests of the command line interface.

Runs use reduced replica counts; the acceptance suite exercises the
full defaults.  Every invocation goes through main() so exit codes and
console output match what a shell user sees.
"""

import json

import numpy as np
import pytest

from polyaflow import SUITES, Window, config_from_json, config_leq, list_suites
from polyaflow.cli import ConfigError, main, validate_config

PASSING_TOML = """\
seed = 99
replicas = 1200
suites = ["sampling-lemma"]
grid = [0.25, 0.5]

[flow]
variant = "polya_sum"
rho = [0.5, 0.5, 0.5, 0.5]

[flow.window]
lo = 0.0
hi = 1.0
cells = 4
"""


def write_config(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------


def test_validate_config_collects_every_violation():
    data = {
        "seed": -3,
        "replicas": 0,
        "suites": ["polya-marginals", "nope"],
        "grid": [0.5, 0.25],
        "typo_key": 1,
        "flow": {"variant": "mystery", "rho": [0.5]},
    }
    with pytest.raises(ConfigError) as exc:
        validate_config(data)
    messages = "\n".join(exc.value.violations)
    assert len(exc.value.violations) >= 6
    assert "typo_key" in messages
    assert "64-bit" in messages
    assert "replicas must be at least 1, got 0" in messages
    assert "unknown suite 'nope'" in messages
    assert "flow.variant" in messages
    assert "strictly increasing" in messages


def test_validate_config_defaults_to_all_suites():
    config = validate_config({})
    assert config.suites == tuple(SUITES)
    assert config.replicas is None
    assert config.flow is None


def test_validate_config_accepts_a_mixture_flow():
    data = {
        "grid": [0.3, 0.6],
        "flow": {
            "variant": "cox_mixture",
            "rho": [0.0],
            "window": {"lo": 0.0, "hi": 1.0, "cells": 1},
            "mixture": [
                {"weight": 0.5, "masses": [1.0]},
                {"weight": 0.5, "masses": [4.0]},
            ],
        },
    }
    config = validate_config(data)
    assert config.flow.variant == "cox_mixture"
    assert len(config.flow.mixture) == 2


def test_validate_config_rejects_grid_beyond_horizon():
    data = {
        "grid": [0.5, 2.0],
        "flow": {
            "variant": "polya_sum",
            "rho": [1.0],
            "window": {"lo": 0.0, "hi": 1.0, "cells": 1},
        },
    }
    with pytest.raises(ConfigError) as exc:
        validate_config(data)
    assert any("grid time 2.0" in v for v in exc.value.violations)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_passing_config_exits_zero(tmp_path, capsys):
    cfg = write_config(tmp_path, PASSING_TOML)
    out = str(tmp_path / "out")
    assert main(["run", "--config", cfg, "--out", out]) == 0
    captured = capsys.readouterr().out
    assert "2/2 checks passed" in captured
    reports = json.loads((tmp_path / "out" / "reports.json").read_text())
    assert len(reports) == 2 and all(r["passed"] for r in reports)
    csv_text = (tmp_path / "out" / "reports.csv").read_text()
    assert csv_text.splitlines()[0] == "name,statistic,p_or_err,passed"
    assert (tmp_path / "out" / "paths.jsonl").read_text().count("\n") == 1200


def test_run_is_byte_identical_across_reruns_and_threads(tmp_path):
    cfg = write_config(tmp_path, PASSING_TOML)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["run", "--config", cfg, "--out", out1, "--threads", "1"]) == 0
    assert main(["run", "--config", cfg, "--out", out2, "--threads", "3"]) == 0
    for name in ("reports.json", "reports.csv", "metadata.json", "paths.jsonl"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"{name} differs between runs"


def test_run_failing_check_exits_one(tmp_path):
    # the exit-limit KS bound is calibrated for 1e5 replicas; at 1500
    # the Monte Carlo noise dominates and the suite must report failure
    toml = 'replicas = 1500\nsuites = ["exit-limit"]\n'
    cfg = write_config(tmp_path, toml)
    out = str(tmp_path / "out")
    assert main(["run", "--config", cfg, "--out", out]) == 1
    reports = json.loads((tmp_path / "out" / "reports.json").read_text())
    assert any(not r["passed"] for r in reports)


def test_run_zero_replicas_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, 'replicas = 0\n')
    assert main(["run", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "replicas must be at least 1, got 0" in err


def test_run_reports_every_violation(tmp_path, capsys):
    cfg = write_config(tmp_path, 'replicas = 0\nsuites = ["nope"]\n')
    assert main(["run", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "replicas must be at least 1" in err
    assert "unknown suite 'nope'" in err


# ---------------------------------------------------------------------------
# seed precedence
# ---------------------------------------------------------------------------


def seed_of(out_dir) -> int:
    return json.loads((out_dir / "metadata.json").read_text())["seed"]


def test_seed_precedence_flag_env_config(tmp_path, monkeypatch):
    toml = 'seed = 99\nreplicas = 1200\nsuites = ["sampling-lemma"]\n'
    cfg = write_config(tmp_path, toml)

    out = tmp_path / "cfg"
    main(["run", "--config", cfg, "--out", str(out)])
    assert seed_of(out) == 99

    monkeypatch.setenv("POLYAFLOW_SEED", "7")
    out = tmp_path / "env"
    main(["run", "--config", cfg, "--out", str(out)])
    assert seed_of(out) == 7

    out = tmp_path / "flag"
    main(["run", "--config", cfg, "--seed", "123", "--out", str(out)])
    assert seed_of(out) == 123


def test_invalid_seed_env_exits_two(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("POLYAFLOW_SEED", "not-an-int")
    cfg = write_config(tmp_path, 'replicas = 1200\nsuites = ["sampling-lemma"]\n')
    assert main(["run", "--config", cfg]) == 2
    assert "POLYAFLOW_SEED" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# the other subcommands
# ---------------------------------------------------------------------------


def test_list_suites_names_every_suite(capsys):
    assert main(["list-suites"]) == 0
    out = capsys.readouterr().out
    for name in SUITES:
        assert f"{name}:" in out
    assert main(["list-suites", "--verbose"]) == 0
    verbose = capsys.readouterr().out
    assert "defaults:" in verbose and "seed=20250816" in verbose
    triples = list_suites()
    assert len(triples) == len(SUITES)
    assert all(len(t) == 3 and all(isinstance(x, str) and x for x in t) for t in triples)


def test_simulate_writes_monotone_paths(tmp_path):
    cfg = write_config(tmp_path, PASSING_TOML)
    out = str(tmp_path / "sim")
    assert main(["simulate", "--config", cfg, "--replicas", "40", "--out", out]) == 0
    lines = (tmp_path / "sim" / "paths.jsonl").read_text().splitlines()
    assert len(lines) == 40
    w = Window(0.0, 1.0, 4)
    for line in lines:
        record = json.loads(line)
        states = [config_from_json(w, s) for s in record["states"]]
        assert record["grid"] == [0.25, 0.5]
        assert config_leq(states[0], states[1])


def test_simulate_without_flow_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, 'replicas = 10\n')
    assert main(["simulate", "--config", cfg]) == 2
    assert "[flow] section" in capsys.readouterr().err


def test_exit_limit_subcommand_writes_ks_per_time(tmp_path, capsys):
    out = str(tmp_path / "el")
    code = main(
        ["exit-limit", "--replicas", "3000", "--out", out, "--t", "0.9", "--t", "0.99"]
    )
    assert code == 0
    reports = json.loads((tmp_path / "el" / "reports.json").read_text())
    names = [r["name"] for r in reports]
    assert names == ["exit-limit-sweep/t0.9", "exit-limit-sweep/t0.99"]
    for r in reports:
        assert "exact_lattice_distance" in r["details"]
    assert "ks=" in capsys.readouterr().out


def test_exit_limit_rejects_bad_times(capsys):
    assert main(["exit-limit", "--t", "0.9", "--t", "0.5"]) == 2
    assert "strictly increasing" in capsys.readouterr().err
