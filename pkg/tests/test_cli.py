"""Command-line interface: config parsing, output formats, sweeps."""

import csv
import io
import json
import os

import pytest

from gausscap.cli import (ConfigError, _fmt, main, read_config_file)


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("# comment\neta = 0.7\nN=2  # trailing\n\ns =0.5\n")
    assert read_config_file(str(cfg)) == {"eta": "0.7", "N": "2", "s": "0.5"}


def test_config_file_rejects_garbage(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("eta 0.7\n")
    with pytest.raises(ConfigError):
        read_config_file(str(cfg))


def test_missing_config_is_exit_2(capsys):
    code, _, err = run_cli(["memoryless", "--config", "/nonexistent.cfg"], capsys)
    assert code == 2
    assert "config error" in err


def test_solver_error_is_exit_1(capsys):
    code, _, err = run_cli(["memoryless", "--eta", "1.5"], capsys)
    assert code == 1
    assert "solver error" in err


def test_memoryless_csv_output(capsys):
    code, out, _ = run_cli(["memoryless", "--eta", "0.5", "--N", "1",
                            "--N-env", "1", "--s", "0"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert rows[0]["stage"] == "third"
    assert float(rows[0]["capacity"]) == pytest.approx(0.6225562489, abs=1e-9)


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("eta=0.5\nN=1\nN_env=1\ns=0\n")
    code, out, _ = run_cli(["memoryless", "--config", str(cfg),
                            "--s", "1.2"], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["stage"] == "second"


def test_finite_stage_string_survives_csv(capsys):
    # "2,3,2"-style stage strings contain commas and must round-trip
    code, out, _ = run_cli(["finite", "--env", "nearest-neighbor", "--n", "3",
                            "--N-env", "1", "--s", "1"], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["stage"].count(",") == 2


def test_json_format(capsys):
    code, out, _ = run_cli(["memory", "--eta", "0.5", "--N", "1",
                            "--N-env", "1", "--s", "1",
                            "--format", "json"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert len(payload) == 1
    assert payload[0]["stage"] == "2,3,2"
    assert payload[0]["capacity"] == pytest.approx(0.97612, abs=1e-4)


def test_sweep_ordering_and_axis_column(capsys):
    os.environ["GAUSSCAP_THREADS"] = "1"
    try:
        code, out, _ = run_cli(["sweep", "--command", "memoryless",
                                "--axis", "s", "--start", "0", "--stop", "1",
                                "--steps", "5", "--N-env", "1"], capsys)
    finally:
        del os.environ["GAUSSCAP_THREADS"]
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["s"]) for r in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]
    caps = [float(r["capacity"]) for r in rows]
    assert caps == sorted(caps)  # capacity grows with env squeezing here


def test_sweep_bad_axis(capsys):
    code, _, err = run_cli(["sweep", "--command", "memoryless",
                            "--axis", "bogus", "--start", "0", "--stop", "1",
                            "--steps", "3"], capsys)
    assert code == 2


def test_output_file(tmp_path, capsys):
    dest = tmp_path / "row.csv"
    code, out, _ = run_cli(["memoryless", "--output", str(dest)], capsys)
    assert code == 0
    assert out == ""
    assert dest.read_text().startswith("capacity,")


def test_fmt_is_idempotent_for_round_trip():
    for v in (0.6225562489182657, 1e-12, 123456789.0, 0.1):
        assert _fmt(float(_fmt(v))) == _fmt(v)
