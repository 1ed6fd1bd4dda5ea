"""Experiment config files (JSON, ``"schema": 1``).

Example::

    {
      "schema": 1,
      "kind": "optimality",
      "net":   {"n": 300, "d": 1, "L": 10, "R": 1.0, "activation": "tanh"},
      "init":  {"teacher": {"preset": "teacher", "n": 15, "seed": 7},
                "student": {"preset": "student"}},
      "data":  {"map": {"kind": "shift_circle", "parameters": [1.0]}, "m": 1024, "L": 10, "seed": 1},
      "train": {"beta": 0.003, "steps": 20000, "scaling": "plain", "snapshot_every": 1000, "seed": 0}
    }

Init blocks are either presets (resolved against the actual width) or
explicit ``{"W_xh": {"mean", "variance"}, "W_hh": ..., "W_hy": ...}``.
The resolved form, with explicit laws, is what gets echoed to output dirs.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import MapSpec
from .errors import ConfigError
from .model import NetConfig
from .trainer import InitLaw, TrainConfig, student_law, teacher_law

SCHEMA = 1
KINDS = ("optimality", "width_sweep", "coupling_rate", "diagnose")


def _law(block: dict, width: int, where: str) -> InitLaw:
    preset = block.get("preset")
    if preset == "teacher":
        return teacher_law(width)
    if preset == "student":
        return student_law(width)
    if preset is not None:
        raise ConfigError(f"{where}: unknown preset {preset!r}")
    try:
        return InitLaw.from_dict(block)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{where}: expected explicit W_xh/W_hh/W_hy laws ({exc})") from None


@dataclass
class ExperimentConfig:
    kind: str
    net: NetConfig
    teacher_n: int
    teacher_seed: int
    teacher_law: InitLaw
    student_block: dict
    map_spec: MapSpec
    m: int
    data_seed: int
    train: TrainConfig
    sweep: dict = field(default_factory=dict)
    coupling: dict = field(default_factory=dict)
    output: str | None = None
    teacher_snapshot: str | None = None

    def student_law(self, n: int | None = None) -> InitLaw:
        """Student init law resolved for width ``n`` (default: ``net.n``)."""
        return _law(self.student_block, self.net.n if n is None else n, "init.student")

    def resolved(self) -> dict:
        """Fully explicit config dict (what was actually used)."""
        c = self.net
        out = {
            "schema": SCHEMA,
            "kind": self.kind,
            "net": {"n": c.n, "d": c.d, "L": c.L, "R": c.R, "activation": c.activation},
            "init": {
                "teacher": {"n": self.teacher_n, "seed": self.teacher_seed, **self.teacher_law.to_dict()},
                "student": self.student_law().to_dict(),
            },
            "data": {"map": self.map_spec.to_dict(), "m": self.m, "L": c.L, "seed": self.data_seed},
            "train": {"beta": self.train.beta, "steps": self.train.steps, "scaling": self.train.scaling,
                      "snapshot_every": self.train.snapshot_every, "seed": self.train.seed},
        }
        if self.teacher_snapshot:
            out["init"]["teacher"]["snapshot"] = self.teacher_snapshot
        if self.sweep:
            out["sweep"] = self.sweep
        if self.coupling:
            out["coupling"] = self.coupling
        return out

    def dumps(self) -> str:
        return json.dumps(self.resolved(), indent=2, sort_keys=True) + "\n"


def parse(raw: dict, *, seed: int | None = None, width: int | None = None,
          data_seed: int | None = None) -> ExperimentConfig:
    """Validate a config dict and apply command-line overrides."""
    raw = copy.deepcopy(raw)
    if raw.get("schema", SCHEMA) != SCHEMA:
        raise ConfigError(f"unsupported config schema {raw.get('schema')!r}")
    kind = raw.get("kind", "optimality")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    for key in ("net", "data", "train"):
        if key not in raw:
            raise ConfigError(f"config is missing the {key!r} section")
    net_raw = raw["net"]
    if width is not None:
        net_raw["n"] = width
    try:
        net = NetConfig(**net_raw)
    except TypeError as exc:
        raise ConfigError(f"net: {exc}") from None
    data_raw = raw["data"]
    if data_raw.get("L", net.L) != net.L:
        raise ConfigError(f"data.L={data_raw['L']} differs from net.L={net.L}")
    map_raw = data_raw.get("map", "shift_circle")
    map_spec = MapSpec.from_dict({"kind": map_raw} if isinstance(map_raw, str) else map_raw)
    if map_spec.d != net.d:
        raise ConfigError(f"map dimension {map_spec.d} differs from net.d={net.d}")
    init = raw.get("init", {})
    t_raw = init.get("teacher", {"preset": "teacher", "n": 15, "seed": 0})
    teacher_n = int(t_raw.get("n", 15))
    s_raw = init.get("student", {"preset": "student"})
    tr = dict(raw["train"])
    if seed is not None:
        tr["seed"] = seed
    try:
        train = TrainConfig(beta=float(tr["beta"]), steps=tr["steps"], scaling=tr.get("scaling", "plain"),
                            snapshot_every=tr.get("snapshot_every", 0), seed=int(tr.get("seed", 0)),
                            R=net.R)
    except KeyError as exc:
        raise ConfigError(f"train: missing field {exc}") from None
    sweep = raw.get("sweep", {})
    coupling = raw.get("coupling", {})
    for where, widths in (("sweep", sweep.get("widths")), ("coupling", coupling.get("widths"))):
        if widths is not None and (list(widths) != sorted(widths) or len(set(widths)) != len(widths)):
            raise ConfigError(f"{where}.widths must be strictly ascending")
    if kind == "width_sweep" and not (sweep.get("widths") or sweep.get("seeds")):
        raise ConfigError("width_sweep needs sweep.widths and/or sweep.seeds")
    if kind == "coupling_rate":
        if "widths" not in coupling:
            raise ConfigError("coupling_rate needs coupling.widths")
        n_ref = coupling.setdefault("N_ref", net.n)
        if coupling["widths"][-1] > n_ref and not coupling.get("replace", False):
            raise ConfigError("coupling widths must not exceed N_ref")
        if train.scaling != "meanfield":
            raise ConfigError("coupling_rate requires train.scaling = 'meanfield'")
    snap = t_raw.get("snapshot")
    if snap is not None and not Path(snap).exists():
        raise ConfigError(f"teacher snapshot {snap} does not exist")
    cfg = ExperimentConfig(
        kind=kind, net=net, teacher_n=teacher_n, teacher_seed=int(t_raw.get("seed", 0)),
        teacher_law=_law(t_raw, teacher_n, "init.teacher"),
        student_block=s_raw,
        map_spec=map_spec, m=int(data_raw.get("m", 1024)),
        data_seed=int(data_seed if data_seed is not None else data_raw.get("seed", 0)),
        train=train, sweep=sweep, coupling=coupling, output=raw.get("output"),
        teacher_snapshot=snap,
    )
    cfg.student_law()  # validate eagerly
    return cfg


def load(path, **overrides) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return parse(raw, **overrides)
