"""Predictor sequences generated by iterating a deterministic map.

The default map is the rotation ``T(x) = x + 1`` on the circle ``[0, 2*pi)``,
whose invariant measure is uniform.  Initial points are drawn from a seeded
Philox generator; sample ``i`` always uses the ``i``-th draw of the stream, so
batches are reproducible regardless of how they are later split.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, PreconditionError
from .model import WeightSet, predict

TWO_PI = 2.0 * np.pi
RNG_ALGORITHM = "philox4x64-10"
MAP_KINDS = ("shift_circle", "custom")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass(frozen=True, eq=False)
class MapSpec:
    """Description of the data-generating map.

    ``shift_circle`` rotates by ``parameters[0]`` (default 1.0) modulo 2*pi.
    ``custom`` replays a table of consecutive iterates (shape ``(K, d)``): the
    image of ``table[i]`` is ``table[i+1]``.  Domain checks are disabled for it.
    """

    kind: str = "shift_circle"
    parameters: tuple = (1.0,)
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ConfigError(f"unknown map kind {self.kind!r}")
        object.__setattr__(self, "parameters", tuple(float(p) for p in self.parameters))
        if self.kind == "custom":
            if self.table is None:
                raise ConfigError("custom map requires a table of iterates")
            tab = np.asarray(self.table, dtype=np.float64)
            if tab.ndim == 1:
                tab = tab[:, None]
            if tab.ndim != 2 or tab.shape[0] < 2:
                raise ConfigError("custom map table must have shape (K, d) with K >= 2")
            tab.flags.writeable = False
            object.__setattr__(self, "table", tab)

    @property
    def d(self) -> int:
        return 1 if self.kind == "shift_circle" else self.table.shape[1]

    @property
    def rotation(self) -> float:
        return self.parameters[0] if self.parameters else 1.0

    @classmethod
    def from_file(cls, path) -> "MapSpec":
        """Load a custom map from a whitespace/comma separated table of iterates."""
        text = Path(path).read_text()
        delimiter = "," if "," in text else None
        return cls(kind="custom", parameters=(), table=np.loadtxt(path, delimiter=delimiter, ndmin=2))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "parameters": list(self.parameters)}
        if self.kind == "custom":
            out["table"] = self.table.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MapSpec":
        if "table_file" in d:
            return cls.from_file(d["table_file"])
        return cls(kind=d.get("kind", "shift_circle"),
                   parameters=tuple(d.get("parameters", (1.0,))),
                   table=d.get("table"))


def iterate_map(spec: MapSpec, x):
    """Apply the map once."""
    if spec.kind == "shift_circle":
        x = np.asarray(x, dtype=np.float64)
        if np.any((x < 0) | (x >= TWO_PI)) or not np.all(np.isfinite(x)):
            raise DomainError(f"point {x} outside [0, 2*pi)")
        y = np.mod(x + spec.rotation, TWO_PI)
        # x + r can round up to exactly 2*pi
        y = np.where(y >= TWO_PI, 0.0, y)
        return float(y) if y.ndim == 0 else y
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    hits = np.flatnonzero(np.all(spec.table[:-1] == x, axis=1))
    if hits.size == 0:
        raise PreconditionError(f"point {x} is not a tabulated iterate with a successor")
    return spec.table[hits[0] + 1].copy()


@dataclass(frozen=True, eq=False)
class SequenceBatch:
    """``m`` sequences of ``L+1`` points in time order ``x_{-L} .. x_0``.

    ``sequences`` has shape ``(m, L+1, d)``; ``targets`` is ``None`` until the
    batch is labelled.
    """

    sequences: np.ndarray
    targets: np.ndarray | None
    seed: int
    map_spec: MapSpec = field(default_factory=MapSpec)

    def __post_init__(self):
        seq = np.array(self.sequences, dtype=np.float64)
        if seq.ndim != 3:
            raise ConfigError(f"sequences must have shape (m, L+1, d), got {seq.shape}")
        seq.flags.writeable = False
        object.__setattr__(self, "sequences", seq)
        if self.targets is not None:
            tgt = np.array(self.targets, dtype=np.float64)
            if tgt.shape != (seq.shape[0],):
                raise ConfigError(f"targets have shape {tgt.shape}, expected ({seq.shape[0]},)")
            tgt.flags.writeable = False
            object.__setattr__(self, "targets", tgt)

    @property
    def m(self) -> int:
        return self.sequences.shape[0]

    @property
    def L(self) -> int:
        return self.sequences.shape[1] - 1

    @property
    def d(self) -> int:
        return self.sequences.shape[2]

    @property
    def labeled(self) -> bool:
        return self.targets is not None

    def require_labels(self):
        if self.targets is None:
            raise PreconditionError("batch has no targets; label it first")
        return self.targets

    def metadata(self) -> dict:
        return {
            "seed": self.seed, "m": self.m, "L": self.L, "d": self.d,
            "map": self.map_spec.kind, "parameters": list(self.map_spec.parameters),
            "rng": RNG_ALGORITHM, "labeled": self.labeled,
        }


def sample_batch(spec: MapSpec, m: int, L: int, seed: int) -> SequenceBatch:
    """Draw ``m`` initial points from the invariant measure and iterate ``L`` times."""
    if int(m) != m or m < 1:
        raise ConfigError(f"m must be a positive integer, got {m!r}")
    if int(L) != L or L < 0:
        raise ConfigError(f"L must be a non-negative integer, got {L!r}")
    rng = make_rng(seed)
    if spec.kind == "shift_circle":
        seq = np.empty((m, L + 1, 1))
        seq[:, 0, 0] = rng.random(m) * TWO_PI
        for p in range(L):
            seq[:, p + 1, 0] = iterate_map(spec, seq[:, p, 0])
    else:
        K = spec.table.shape[0]
        if K < L + 1:
            raise ConfigError(f"custom table has {K} iterates, need at least {L + 1}")
        # uniform over trajectory windows approximates the invariant measure
        starts = np.floor(rng.random(m) * (K - L)).astype(np.int64)
        seq = spec.table[starts[:, None] + np.arange(L + 1)]
    return SequenceBatch(seq, None, int(seed), spec)


def label_with_teacher(batch: SequenceBatch, teacher: WeightSet) -> SequenceBatch:
    c = teacher.config
    if c.L != batch.L or c.d != batch.d:
        raise ConfigError(f"teacher expects (L={c.L}, d={c.d}), batch has (L={batch.L}, d={batch.d})")
    return replace(batch, targets=predict(teacher, batch.sequences))


def _fmt(v: float) -> str:
    return repr(float(v))


def save_batch(batch: SequenceBatch, path, extra_meta: dict | None = None) -> tuple[Path, Path]:
    """Write ``<path>`` (CSV) and ``<path>.json`` metadata.

    One row per (sample, lag k, dim); ``value`` is ``x_{-k}``.  Rows run in time
    order within a sample, i.e. ``k = L, ..., 0``.
    """
    path = Path(path)
    L = batch.L
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["sample", "k", "dim", "value", "target"])
        for i in range(batch.m):
            tgt = _fmt(batch.targets[i]) if batch.labeled else ""
            for p in range(L + 1):
                for c in range(batch.d):
                    wr.writerow([i, L - p, c, _fmt(batch.sequences[i, p, c]), tgt])
    meta = batch.metadata()
    if batch.map_spec.kind == "custom":
        meta["table"] = batch.map_spec.table.tolist()
    if extra_meta:
        meta.update(extra_meta)
    meta_path = path.with_name(path.name + ".json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, meta_path


def load_batch(path) -> SequenceBatch:
    path = Path(path)
    meta_path = path.with_name(path.name + ".json")
    meta = json.loads(meta_path.read_text())
    m, L, d = meta["m"], meta["L"], meta["d"]
    seq = np.empty((m, L + 1, d))
    tgt = np.full(m, np.nan)
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != ["sample", "k", "dim", "value", "target"]:
            raise ConfigError(f"unexpected batch CSV header {header}")
        for row in rd:
            i, k, c = int(row[0]), int(row[1]), int(row[2])
            seq[i, L - k, c] = float(row[3])
            if row[4]:
                tgt[i] = float(row[4])
    targets = tgt if meta.get("labeled") else None
    if meta["map"] == "custom":
        spec = MapSpec(kind="custom", parameters=tuple(meta.get("parameters", ())), table=meta["table"])
    else:
        spec = MapSpec(kind=meta["map"], parameters=tuple(meta.get("parameters", (1.0,))))
    return SequenceBatch(seq, targets, meta["seed"], spec)
