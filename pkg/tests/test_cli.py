from pathlib import Path

import pytest

from esqnn.cli import main, parse_args, read_config
from esqnn.exceptions import ConfigurationError
from esqnn.plotting import read_csv

FIXTURE = Path(__file__).resolve().parent.parent / "data" / "mnist01"


def train_argv(out, *extra):
    return ["train", "--model", "2", "--eta", "0.001", "--epochs", "1", "--repeats", "2",
            "--train-n", "4", "--val-n", "2", "--data-dir", str(FIXTURE), "--out", str(out), *extra]


def test_train_runs_and_is_deterministic(tmp_path, capsys):
    assert main(train_argv(tmp_path / "a")) == 0
    assert main(train_argv(tmp_path / "b", "--workers", "2")) == 0
    printed = capsys.readouterr().out.split()
    assert any(p.endswith("model2_eta0.001_lamrule.csv") for p in printed)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_bp_variance_runs_and_is_deterministic(tmp_path):
    argv = ["bp-variance", "--qubits", "2,3", "--layers", "1", "--samples", "30", "--estimator", "es"]
    assert main([*argv, "--out", str(tmp_path / "a")]) == 0
    assert main([*argv, "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    a, b = tmp_path / "a" / "bp_variance_es.csv", tmp_path / "b" / "bp_variance_es.csv"
    assert a.read_bytes() == b.read_bytes()
    assert [r["n"] for r in read_csv(a)] == [2, 3]


def test_list_flags_accept_commas_and_spaces():
    args = parse_args(["train", "--model", "1", "--eta", "0.1,0.01", "0.001", "--lambda", "rule", "4"])
    assert args.eta == ["0.1,0.01", "0.001"] and args.lam == ["rule", "4"]


def test_config_file_overridden_by_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# desk run\nepochs = 7\nmodel = 1\neta = 0.01, 0.001\ntrain_n = 20\n")
    args = parse_args(["train", "--config", str(cfg), "--epochs", "3"])
    assert args.epochs == 3 and args.model == 1 and args.train_n == 20
    assert args.eta == ["0.01,", "0.001"]


def test_bad_config_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("epochs 7\n")
    with pytest.raises(ConfigurationError, match="bad.cfg:1"):
        read_config(cfg)
    assert main(["train", "--config", str(cfg), "--model", "1"]) == 1


def test_errors_give_nonzero_exit(tmp_path, capsys):
    assert main(train_argv(tmp_path, "--lambda", "many")) == 1
    assert "lambda" in capsys.readouterr().err
    assert main(["bp-variance", "--samples", "5", "--out", str(tmp_path)]) == 1
    assert main(train_argv(tmp_path, "--data-dir", str(tmp_path / "none"))) == 1
    assert "not found" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["train"])
    assert exc.value.code != 0
