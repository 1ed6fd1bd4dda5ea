import json
import subprocess
import sys

import pytest

from mfrnn.cli import main

BASE = {
    "schema": 1, "kind": "optimality",
    "net": {"n": 12, "d": 1, "L": 3, "R": 1.0},
    "init": {"teacher": {"preset": "teacher", "n": 5, "seed": 7}, "student": {"preset": "student"}},
    "data": {"map": "shift_circle", "m": 32, "L": 3, "seed": 1},
    "train": {"beta": 0.01, "steps": 20, "scaling": "meanfield", "snapshot_every": 5, "seed": 0},
}


def write(tmp_path, name="c.json", **patch):
    p = tmp_path / name
    p.write_text(json.dumps({**BASE, **patch}))
    return str(p)


def test_pipeline(tmp_path):
    cfg = write(tmp_path)
    out = tmp_path / "run"
    assert main(["gen-data", "--config", cfg, "--out", str(out)]) == 0
    assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "metrics.csv").read_text().splitlines()
    assert len(lines) == 1 + 21
    assert len(list((out / "snapshots").glob("*.mfw"))) == 5
    assert main(["diagnose", "--run", str(out)]) == 0
    assert len((out / "stationarity.csv").read_text().splitlines()) == 1 + 5
    assert main(["report", "--run", str(out)]) == 0
    assert (out / "loss.svg").read_text().startswith("<svg")
    assert "stationarity" in (out / "summary.txt").read_text()


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path)
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["gen-data", "--config", cfg, "--out", str(out)]) == 0
        assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    for f in ("batch.csv", "batch.csv.json", "metrics.csv", "config.json", "final.mfw"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_resume(tmp_path):
    cfg = write(tmp_path)
    full, part = tmp_path / "full", tmp_path / "part"
    for out in (full, part):
        assert main(["gen-data", "--config", cfg, "--out", str(out)]) == 0
    assert main(["train", "--config", cfg, "--out", str(full)]) == 0
    short = write(tmp_path, "short.json", train={**BASE["train"], "steps": 10})
    assert main(["train", "--config", short, "--out", str(part)]) == 0
    snap = part / "snapshots" / "step_00000010.mfw"
    assert main(["train", "--config", cfg, "--out", str(part), "--resume", str(snap)]) == 0
    assert (full / "metrics.csv").read_bytes() == (part / "metrics.csv").read_bytes()
    assert (full / "final.mfw").read_bytes() == (part / "final.mfw").read_bytes()


def test_exit_codes(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    bad = write(tmp_path, "bad.json", train={"beta": 0.01, "steps": 0})
    assert main(["train", "--config", bad, "--out", str(tmp_path / "o")]) == 1
    assert "steps" in capsys.readouterr().err
    # training without data
    assert main(["train", "--config", write(tmp_path), "--out", str(tmp_path / "nodata")]) == 1
    # nothing to report
    (tmp_path / "empty").mkdir()
    assert main(["report", "--run", str(tmp_path / "empty")]) == 1
    assert "metrics.csv" in capsys.readouterr().err


def test_numeric_abort(tmp_path, capsys):
    cfg = write(tmp_path, net={"n": 12, "d": 1, "L": 3, "R": 1.0},
                train={"beta": 1e300, "steps": 5, "scaling": "meanfield", "snapshot_every": 1, "seed": 0})
    out = tmp_path / "run"
    assert main(["gen-data", "--config", cfg, "--out", str(out)]) == 0
    assert main(["train", "--config", cfg, "--out", str(out)]) == 2
    assert "last snapshot" in capsys.readouterr().err


def test_sweep_and_jobs(tmp_path):
    cfg = write(tmp_path, kind="width_sweep", sweep={"widths": [4, 8], "seeds": [0, 1]})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "j1"), "--jobs", "1"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "j2"), "--jobs", "2"]) == 0
    for sub in ("n0004_seed0", "n0008_seed1"):
        a = (tmp_path / "j1" / sub / "metrics.csv").read_bytes()
        assert a == (tmp_path / "j2" / sub / "metrics.csv").read_bytes()
    assert (tmp_path / "j1" / "sweep.json").read_bytes() == (tmp_path / "j2" / "sweep.json").read_bytes()


def test_couple_and_report(tmp_path):
    cfg = write(tmp_path, kind="coupling_rate", net={"n": 16, "d": 1, "L": 3, "R": 1.0},
                coupling={"widths": [4, 8, 16], "N_ref": 16, "seed": 2})
    out = tmp_path / "c"
    assert main(["couple", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "dtau.csv").read_text().splitlines()
    assert rows[0] == "n,tau,D_tau,slope_fit" and len(rows) == 4
    assert main(["report", "--run", str(out)]) == 0
    assert (out / "dtau.svg").exists()


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "mfrnn.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "gen-data" in res.stdout
