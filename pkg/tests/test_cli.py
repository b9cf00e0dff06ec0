import json
import os

import numpy as np
import pytest

from asrnlab.cli import run


def read(path):
    with open(path) as fh:
        return fh.read()


def test_broken_bandit_outputs_and_byte_determinism(tmp_path, capsys):
    argv = ["broken-bandit", "--agents", "5", "--episodes", "1200", "--noiser", "asrn", "--seed", "7"]
    assert run(argv + ["--out", str(tmp_path / "a")]) == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["master_seed"] == 7 and echoed["noiser"]["mode"] == "asrn"
    assert run(argv + ["--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == ["config.json", "noise_tables.json", "steps.csv", "success.csv", "summary.json", "upsilon.csv"]
    for name in names:
        assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name)
    summary = json.loads(read(tmp_path / "a" / "summary.json"))
    assert set(summary) >= {"final_success_fraction", "trap_events", "noise_tables", "config"}
    assert len(read(tmp_path / "a" / "steps.csv").splitlines()) == 1 + 5 * 1200


def test_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"num_agents": 3, "num_episodes": 50, "agent": {"alpha": 0.2}, "master_seed": 11}))
    assert run(["broken-bandit", "--config", str(cfg), "--alpha", "0.3", "--out", str(tmp_path / "o")]) == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["agent"]["alpha"] == 0.3
    assert echoed["num_agents"] == 3 and echoed["master_seed"] == 11
    assert echoed["agent"]["gamma"] == 0.95
    assert json.loads(read(tmp_path / "o" / "config.json")) == echoed


def test_trace(tmp_path):
    assert run(["trace", "--episodes", "2000", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert read(tmp_path / "events.csv").splitlines()[0] == "episode,kind"
    summary = json.loads(read(tmp_path / "summary.json"))
    assert summary["config"]["agent"]["epsilon0"] == 0.0
    assert summary["config"]["arms"][1] == {"mean": 1.0, "std": 7.0}


def test_sweep_rows(tmp_path):
    argv = ["sweep", "--episodes", "100", "--agents", "5", "--sigma-left-values", "0,0.5,1",
            "--sigma-right-values", "1,2", "--out", str(tmp_path)]
    assert run(argv) == 0
    lines = read(tmp_path / "sweep.csv").splitlines()
    assert lines[0] == "sigma_left,sigma_right,num_success,num_agents"
    assert len(lines) == 1 + 3 * 2


def test_noise_table_dump(tmp_path):
    assert run(["noise-table", "--out", str(tmp_path)]) == 0
    table = json.loads(read(tmp_path / "noise_table.json"))
    assert len(table["bin_std"]) == 10 and sum(table["bin_count"]) == 1000
    s, n = np.array(table["bin_std"]), np.array(table["bin_noise"])
    np.testing.assert_allclose(s**2 + n**2, table["s_max"] ** 2, rtol=1e-9)
    assert "s_max" in read(tmp_path / "noise_table.txt")


def test_noise_table_single_bin(tmp_path):
    assert run(["noise-table", "--bins", "1", "--out", str(tmp_path)]) == 0
    assert json.loads(read(tmp_path / "noise_table.json"))["bin_noise"] == [0.0]


def test_noise_table_infeasible(tmp_path, capsys):
    assert run(["noise-table", "--calibration-steps", "5", "--bins", "10", "--out", str(tmp_path)]) == 1
    assert "calibration_steps" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [["bogus"], [], ["broken-bandit", "--agents", "many"], ["broken-bandit", "--noiser", "loud"],
     ["broken-bandit", "--gamma", "1.0"], ["broken-bandit", "--threads", "0"]],
)
def test_usage_errors(argv, tmp_path, capsys):
    assert run(argv + ["--out", str(tmp_path)] if argv else argv) == 1
    assert capsys.readouterr().err


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["trace", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert run(["trace", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["trace", "--episodes", "10", "--out", str(blocker / "sub")]) == 2
