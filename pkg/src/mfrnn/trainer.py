"""Explicit-Euler integration of the truncated gradient flow.

One step of size ``beta`` applies

    W_hy <- W_hy - beta * g_hy
    W_xh <- W_xh - beta * g_xh
    W_hh <- W_hh - beta * chi_R(W_hh) * g_hh

Entries that would land outside ``[-R, R]`` (possible for Euler, not for the
continuous flow) are clamped to the boundary and counted.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import snapshot
from .data import SequenceBatch, make_rng
from .errors import ConfigError, MFRNNError, NumericError
from .grad import SCALINGS, GradientSet, value_and_gradient
from .model import NetConfig, WeightSet, chi_R, predict

log = logging.getLogger(__name__)

METRICS_HEADER = ["step", "t", "loss", "loss_x2", "grad_hy", "grad_hh", "grad_xh",
                  "max_abs_whh", "clamp_count"]


@dataclass(frozen=True)
class Normal:
    mean: float = 0.0
    variance: float = 0.0

    def __post_init__(self):
        if not self.variance >= 0:
            raise ConfigError(f"variance must be non-negative, got {self.variance!r}")

    def to_dict(self):
        return {"mean": self.mean, "variance": self.variance}


@dataclass(frozen=True)
class InitLaw:
    """Independent normal laws for each weight block."""

    xh: Normal
    hh: Normal
    hy: Normal

    def to_dict(self):
        return {"W_xh": self.xh.to_dict(), "W_hh": self.hh.to_dict(), "W_hy": self.hy.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(Normal(**d["W_xh"]), Normal(**d["W_hh"]), Normal(**d["W_hy"]))


def teacher_law(n_t: int) -> InitLaw:
    """W_xh ~ N(1, 1), W_hh ~ N(0, n_t^-2), W_hy ~ N(0, n_t^-2)."""
    return InitLaw(Normal(1.0, 1.0), Normal(0.0, n_t ** -2.0), Normal(0.0, n_t ** -2.0))


def student_law(n_s: int) -> InitLaw:
    """W_xh ~ N(0, 5), W_hh ~ N(0, 10 n_s^-2), W_hy ~ N(0, 10 n_s^-2)."""
    return InitLaw(Normal(0.0, 5.0), Normal(0.0, 10.0 * n_s ** -2.0), Normal(0.0, 10.0 * n_s ** -2.0))


def init_weights(config: NetConfig, law: InitLaw, seed: int) -> WeightSet:
    """Draw W_xh, W_hh, W_hy (in that order) from a Philox stream keyed by ``seed``."""
    rng = make_rng(seed)
    n, d = config.n, config.d
    W_xh = rng.normal(law.xh.mean, math.sqrt(law.xh.variance), (n, d))
    W_hh = rng.normal(law.hh.mean, math.sqrt(law.hh.variance), (n, n))
    W_hy = rng.normal(law.hy.mean, math.sqrt(law.hy.variance), n)
    return WeightSet(W_xh, W_hh, W_hy, config, 0.0)


@dataclass(frozen=True)
class TrainConfig:
    beta: float
    steps: int
    scaling: str = "plain"
    snapshot_every: int = 0
    seed: int = 0
    R: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError(f"beta must be positive, got {self.beta!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps!r}")
        if self.scaling not in SCALINGS:
            raise ConfigError(f"scaling must be one of {SCALINGS}, got {self.scaling!r}")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be a non-negative integer")
        if not self.R > 0:
            raise ConfigError(f"R must be positive, got {self.R!r}")

    def snapshot_steps(self, start: int = 0) -> list[int]:
        every = self.snapshot_every
        grid = list(range(0, self.steps + 1, every)) if every else [0]
        if grid[-1] != self.steps:
            grid.append(self.steps)
        return [s for s in grid if s >= start]


@dataclass
class TrajectoryLog:
    """Per-step metrics plus the snapshot index of a training run.

    ``records`` holds one row per step in :data:`METRICS_HEADER` order.
    ``snapshots`` maps step -> MFW1 path (when written to disk) and
    ``weights`` maps step -> in-memory :class:`WeightSet` (when kept).
    """

    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    aborted: bool = False
    message: str = ""
    final: WeightSet | None = None

    def column(self, name: str) -> np.ndarray:
        j = METRICS_HEADER.index(name)
        return np.array([r[j] for r in self.records])

    @property
    def steps(self) -> np.ndarray:
        return self.column("step").astype(int)

    @property
    def clamp_count(self) -> int:
        return int(self.records[-1][-1]) if self.records else 0

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(METRICS_HEADER)
            for r in self.records:
                wr.writerow(_format_record(r))
        return path

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        out = cls()
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd)
            if header != METRICS_HEADER:
                raise ConfigError(f"unexpected metrics header {header}")
            for row in rd:
                out.records.append((int(row[0]), *map(float, row[1:8]), int(row[8])))
        return out

    def same_as(self, other: "TrajectoryLog") -> bool:
        return self.records == other.records


def _format_record(r):
    return [r[0]] + [repr(float(v)) for v in r[1:8]] + [r[8]]


class TrainingAborted(MFRNNError):
    """Training stopped early; ``log`` holds the partial trajectory."""

    def __init__(self, message, log: TrajectoryLog, last_snapshot=None, numeric=True):
        super().__init__(message)
        self.log = log
        self.last_snapshot = last_snapshot
        self.numeric = numeric


def loss(w: WeightSet, batch: SequenceBatch) -> float:
    """Empirical risk ``(1/m) sum 0.5 (F_hat - F*)^2``."""
    y = batch.require_labels()
    dF = predict(w, batch.sequences) - y
    return 0.5 * float(np.mean(dF * dF))


def _update(w: WeightSet, g: GradientSet, beta: float, R: float, t: float):
    with np.errstate(over="ignore", invalid="ignore"):
        W_hy = w.W_hy - beta * g.g_hy
        W_xh = w.W_xh - beta * g.g_xh
        W_hh = w.W_hh - beta * (chi_R(w.W_hh, R) * g.g_hh)
    over = np.abs(W_hh) > R
    clamps = int(np.count_nonzero(over))
    if clamps:
        W_hh = np.where(over, np.copysign(R, W_hh), W_hh)
    for name, a in (("W_hy", W_hy), ("W_xh", W_xh), ("W_hh", W_hh)):
        if not np.all(np.isfinite(a)):
            raise NumericError(f"non-finite {name} after update")
    return WeightSet(W_xh, W_hh, W_hy, w.config, t), clamps


def step(w: WeightSet, batch: SequenceBatch, cfg: TrainConfig) -> WeightSet:
    """One Euler step; ``t`` advances by ``beta``."""
    _, g = value_and_gradient(w, batch, cfg.scaling)
    return _update(w, g, cfg.beta, cfg.R, w.t + cfg.beta)[0]


def train(w0: WeightSet, batch: SequenceBatch, cfg: TrainConfig, out_dir=None, *,
          start_step: int = 0, clamp_count: int = 0, keep_weights: bool = False,
          prior: TrajectoryLog | None = None) -> TrajectoryLog:
    """Run ``cfg.steps - start_step`` Euler steps from ``w0``.

    A record is logged for every step ``s`` in ``start_step .. cfg.steps``
    (metrics of the weights *before* update ``s + 1``).  With ``out_dir`` the
    metrics go to ``out_dir/metrics.csv`` and snapshots to
    ``out_dir/snapshots/step_XXXXXXXX.mfw``.  ``prior`` (rows up to
    ``start_step - 1``) is prepended when resuming.
    """
    if w0.config.R != cfg.R:
        raise ConfigError(f"net R={w0.config.R} differs from train R={cfg.R}")
    if not 0 <= start_step <= cfg.steps:
        raise ConfigError(f"start_step {start_step} outside 0..{cfg.steps}")
    if float(np.max(np.abs(w0.W_hh))) > cfg.R:
        log.warning("initial max|W_hh| = %.4g exceeds R = %.4g; truncation bound not guaranteed",
                    float(np.max(np.abs(w0.W_hh))), cfg.R)
    snap_at = set(cfg.snapshot_steps(start_step))
    traj = TrajectoryLog(records=list(prior.records) if prior else [])
    if prior:
        traj.snapshots.update({s: p for s, p in prior.snapshots.items() if s < start_step})
    snap_dir = metrics_fh = writer = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        snap_dir = out_dir / "snapshots"
        snap_dir.mkdir(parents=True, exist_ok=True)
        metrics_fh = open(out_dir / "metrics.csv", "w", newline="")
        writer = csv.writer(metrics_fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for r in traj.records:
            writer.writerow(_format_record(r))
    last_snap = traj.snapshots[max(traj.snapshots)] if traj.snapshots else None
    warned = False
    w = w0.replace(t=start_step * cfg.beta)
    try:
        for s in range(start_step, cfg.steps + 1):
            if s in snap_at:
                if keep_weights:
                    traj.weights[s] = w
                if snap_dir is not None:
                    last_snap = snapshot.save(w, snap_dir / f"step_{s:08d}.mfw")
                    traj.snapshots[s] = last_snap
            value, g = value_and_gradient(w, batch, cfg.scaling)
            n_hy, n_hh, n_xh = g.norms()
            rec = (s, s * cfg.beta, value, 2.0 * value, n_hy, n_hh, n_xh,
                   float(np.max(np.abs(w.W_hh))), clamp_count)
            traj.records.append(rec)
            if writer is not None:
                writer.writerow(_format_record(rec))
            if s == cfg.steps:
                break
            if not warned and cfg.beta * float(np.max(np.abs(g.g_hh))) > cfg.R / 2:
                log.warning("step %d: beta*max|g_hh| exceeds R/2; Euler may jump the truncation band", s)
                warned = True
            w, clamps = _update(w, g, cfg.beta, cfg.R, (s + 1) * cfg.beta)
            if clamps:
                log.warning("step %d: clamped %d hidden weights to |w| = R", s, clamps)
                clamp_count += clamps
    except NumericError as exc:
        traj.aborted, traj.message = True, str(exc)
        raise TrainingAborted(f"numeric abort: {exc}; last snapshot {last_snap}", traj, last_snap) from exc
    except OSError as exc:
        traj.aborted, traj.message = True, str(exc)
        raise TrainingAborted(f"I/O failure: {exc}", traj, last_snap, numeric=False) from exc
    finally:
        if metrics_fh is not None:
            metrics_fh.close()
    traj.final = w
    return traj
