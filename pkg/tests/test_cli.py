import csv
import json
import shutil

import pytest

from pliss_lab.cli import main
from pliss_lab.models import LOG_CAT_EXPANSION


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_lyapunov_example(tmp_path, capsys):
    code = main(["run", "--model", "cat2", "--experiment", "lyapunov", "--n", "10000", "--seed", "7",
                 "--out", str(tmp_path)])
    assert code == 0
    (row,) = read_rows(tmp_path / "lyapunov.csv")
    assert abs(float(row["lambda_1"]) - LOG_CAT_EXPANSION) <= 1e-6
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["passed"] is True
    assert "[PASS] lyapunov_cat2" in capsys.readouterr().out


def test_pliss_self_test(tmp_path):
    assert main(["run", "--experiment", "pliss", "--self-test", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "criteria.csv")
    assert json.loads(rows[0]["detail"])["cases"] == 1000


def test_empty_config_file_lists_required_keys(tmp_path, capsys):
    cfg = tmp_path / "empty.json"
    cfg.write_text("")
    assert main(["run", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "experiment" in err and "model" in err and "seed" in err


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "lyapunov", "model": "cat2", "seed": 3, "n": 100}))
    assert main(["run", "--config", str(cfg), "--n", "2000", "--out", str(tmp_path / "o")]) == 0
    (row,) = read_rows(tmp_path / "o" / "lyapunov.csv")
    assert row["n"] == "2000"


@pytest.mark.parametrize("argv", [["run", "--experiment", "nope"], ["run", "--model", "henon"], []])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_invalid_values_exit_2(tmp_path):
    assert main(["run", "--experiment", "lyapunov", "--n", "5", "--out", str(tmp_path)]) == 2


def test_failing_criterion_exit_1(tmp_path, capsys):
    # the bi-Pliss equality fails on random dominated cycles
    assert main(["run", "--experiment", "bipliss", "--self-test", "--out", str(tmp_path)]) == 1
    assert "bipliss:bi_pliss_equal" in capsys.readouterr().err


def snapshot(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


@pytest.mark.parametrize("experiment", ["pliss", "folner", "vitali"])
def test_repeat_runs_bit_identical(tmp_path, experiment):
    out = tmp_path / "run"
    argv = ["run", "--experiment", experiment, "--self-test", "--seed", "11", "--out", str(out)]
    main(argv)
    first = snapshot(out)
    shutil.rmtree(out)
    main(argv)
    assert snapshot(out) == first
