import json

import numpy as np
import pytest

from mfrnn import config, snapshot
from mfrnn.errors import ConfigError

from conftest import random_net

BASE = {
    "schema": 1, "kind": "optimality",
    "net": {"n": 10, "d": 1, "L": 2, "R": 2.0},
    "init": {"teacher": {"preset": "teacher", "n": 5, "seed": 1}, "student": {"preset": "student"}},
    "data": {"map": "shift_circle", "m": 16, "L": 2, "seed": 3},
    "train": {"beta": 0.01, "steps": 5, "scaling": "meanfield", "seed": 0},
}


def test_snapshot_roundtrip(rng, tmp_path):
    w = random_net(rng, 6, d=2, L=3, R=1.5).replace(t=0.25)
    p = snapshot.save(w, tmp_path / "w.mfw")
    back = snapshot.load(p)
    assert back.equals(w)
    raw = p.read_bytes()
    assert raw[:4] == b"MFW1"
    assert len(raw) == 4 + 2 + 12 + 16 + 8 * (12 + 36 + 6)
    assert snapshot.to_bytes(back) == raw


def test_snapshot_rejects_corruption(rng):
    raw = snapshot.to_bytes(random_net(rng, 3))
    with pytest.raises(ConfigError):
        snapshot.from_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ConfigError):
        snapshot.from_bytes(raw[:-8])
    with pytest.raises(ConfigError):
        snapshot.from_bytes(raw[:10])


def test_config_resolves_presets():
    cfg = config.parse(BASE)
    r = cfg.resolved()
    assert r["init"]["student"]["W_hh"]["variance"] == pytest.approx(10 / 100)
    assert r["init"]["teacher"]["W_xh"] == {"mean": 1.0, "variance": 1.0}
    assert config.parse(BASE, width=20).student_law().hh.variance == pytest.approx(10 / 400)
    assert config.parse(json.loads(cfg.dumps())).dumps() == cfg.dumps()


@pytest.mark.parametrize("patch", [
    {"schema": 2},
    {"kind": "bogus"},
    {"train": {"beta": 0.01, "steps": 0}},
    {"train": {"beta": -1.0, "steps": 3}},
    {"net": {"n": 0, "L": 2}},
    {"data": {"m": 16, "L": 5}},
    {"init": {"student": {"preset": "nope"}}},
    {"kind": "coupling_rate", "coupling": {"widths": [5, 20]}},
    {"kind": "width_sweep"},
])
def test_config_rejects(patch):
    raw = {**BASE, **patch}
    with pytest.raises(ConfigError):
        config.parse(raw)


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "none.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        config.load(tmp_path / "bad.json")
