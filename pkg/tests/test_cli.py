import csv
import json

import numpy as np
import pytest

from freebs import cli
from freebs.cli import CSV_COLUMNS, emit_csv, main, result_row
from freebs.engine import simulate
from freebs import reference_config

REFERENCE = {
    "n_users": 4,
    "slot_duration_ms": 1.0,
    "packet_bits": 1,
    "bs_power_db": 20,
    "user_powers_db": 20,
    "mean_gain_bs": 0.3,
    "mean_gain_d2d": 0.3,
    "qos": 0.9,
    "control_v": 1000,
    "n_slots": 300,
    "seed": 3,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "reference.json"
    path.write_text(json.dumps(REFERENCE))
    return path


def test_run_writes_summary(config_file, tmp_path):
    out = tmp_path / "s.json"
    assert main(["run", "--config", str(config_file), "--scheduler", "free_bs", "--seed", "7", "--summary", str(out)]) == 0
    data = json.loads(out.read_text())
    assert 0 <= data["offloading_factor"] <= 1
    assert data["seed"] == 7 and len(data["delivery_ratio"]) == 4
    assert set(data["queue_drift"]) == {"y", "z"}


def test_run_summary_to_stdout(config_file, capsys):
    assert main(["run", "--config", str(config_file), "--slots", "50"]) == 0
    assert json.loads(capsys.readouterr().out)["n_slots"] == 50


def test_trace_byte_identical(config_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["run", "--config", str(config_file), "--trace", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(a.open()))
    assert len(rows) == REFERENCE["n_slots"]
    assert rows[0]["slot"] == "1" and "y3" in rows[0] and "z" in rows[0]


def test_sweep_csv(config_file, tmp_path):
    out = tmp_path / "sweep"
    argv = ["sweep", "--config", str(config_file), "--param", "n_users", "--values", "2,4,8,16",
            "--reps", "2", "--slots", "40", "--out", str(out)]
    assert main(argv) == 0
    path = out / "sweep_n_users.csv"
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 4 * 2 * 2
    rows = list(csv.DictReader(path.open()))
    assert all(0 <= float(r["offloading_factor"]) <= 1 for r in rows)
    first = path.read_bytes()
    assert main(argv) == 0
    assert path.read_bytes() == first


def test_verify_passes(tmp_path):
    path = tmp_path / "n6.json"
    path.write_text(json.dumps(dict(REFERENCE, n_users=6)))
    assert main(["verify", "--config", str(path), "--slots", "300"]) == 0


def test_verify_detects_mismatch(config_file, monkeypatch):
    real = cli.free_bs_decide

    def off_by_one(*args):
        d = real(*args)
        d.objective += 1.0
        return d

    monkeypatch.setattr(cli, "free_bs_decide", off_by_one)
    assert main(["verify", "--config", str(config_file), "--slots", "5"]) == 2


def test_error_exit_codes(config_file, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(dict(REFERENCE, qos=1.2)))
    assert main(["run", "--config", str(bad)]) == 1
    assert "qos out of range" in capsys.readouterr().err
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["run", "--config", str(broken)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["run", "--config", str(config_file), "--bogus"]) == 1
    assert main(["frobnicate"]) == 1
    unwritable = tmp_path / "no" / "such" / "dir" / "s.json"
    assert main(["run", "--config", str(config_file), "--slots", "5", "--summary", str(unwritable)]) == 1
    assert "cannot write" in capsys.readouterr().err
    assert main(["sweep", "--config", str(config_file), "--param", "n_users", "--values", "4,2",
                 "--out", str(tmp_path)]) == 1


def test_emit_csv_single_run(tmp_path):
    cfg = reference_config(3, n_slots=100)
    _, s = simulate(cfg, record=False)
    path = tmp_path / "one.csv"
    emit_csv([result_row(s, scheduler="free_bs", seed=cfg.seed)], path)
    assert len(path.read_text().splitlines()) == 2
    with pytest.raises(ValueError):
        emit_csv([], path)
    with pytest.raises(OSError, match="cannot write"):
        emit_csv([result_row(s)], tmp_path / "missing" / "x.csv")


def test_float_format():
    assert cli.fmt(1 / 3) == "0.333333333"
    assert cli.fmt(float("nan")) == "nan"


def test_baseline_not_above_free_bs_paired():
    for seed in range(3):
        cfg = reference_config(4, n_slots=3000, seed=seed)
        _, fb = simulate(cfg, "free_bs", record=False)
        _, bl = simulate(cfg, "baseline", record=False)
        assert bl.offloading_factor <= fb.offloading_factor
