"""Coupled finite-width trajectories and the D_tau distance.

A reference network of width ``N_ref`` stands in for the mean-field limit.
Children of width ``n`` are built by gathering ``n`` reference neurons
(sampled without replacement by default); child and reference are then
trained on the same data and compared neuron-by-neuron.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import SequenceBatch, make_rng
from .errors import ConfigError, MFRNNError, PreconditionError
from .model import WeightSet
from .trainer import TrainConfig, TrajectoryLog, train

log = logging.getLogger(__name__)


def gather(w: WeightSet, idx) -> WeightSet:
    """Width-``len(idx)`` network made of the neurons ``idx`` of ``w`` (same time)."""
    idx = np.asarray(idx, dtype=np.int64)
    cfg = w.config.with_width(len(idx))
    return WeightSet(w.W_xh[idx], w.W_hh[np.ix_(idx, idx)], w.W_hy[idx], cfg, w.t)


def subsample(reference: WeightSet, n: int, seed: int, replace: bool = False):
    """Sample ``n`` reference neurons and return ``(child, index_set)``.

    Indices are 0-based and sorted, so ``n == N_ref`` without replacement is
    the identity.  ``replace=True`` gives the iid-with-replacement variant.
    """
    N = reference.n
    if int(n) != n or n < 1:
        raise ConfigError(f"width must be a positive integer, got {n!r}")
    if not replace and n > N:
        raise ConfigError(f"cannot draw {n} neurons without replacement from {N}")
    rng = make_rng(seed)
    idx = np.sort(rng.choice(N, size=int(n), replace=replace))
    return gather(reference, idx).replace(t=0.0), idx


@dataclass
class CouplingPlan:
    reference: WeightSet
    widths: list
    index_sets: dict
    seed: int
    replace: bool = False

    @classmethod
    def build(cls, reference: WeightSet, widths, seed: int, replace: bool = False) -> "CouplingPlan":
        widths = [int(n) for n in widths]
        if widths != sorted(widths) or len(set(widths)) != len(widths):
            raise ConfigError("widths must be strictly ascending")
        # one independent stream per width, keyed by (seed, width)
        sets = {n: subsample(reference, n, seed * 1_000_003 + n, replace)[1] for n in widths}
        return cls(reference, widths, sets, seed, replace)

    def child(self, n: int) -> WeightSet:
        return gather(self.reference, self.index_sets[n]).replace(t=0.0)


def _block_distance(a: WeightSet, b: WeightSet) -> float:
    n = a.n
    d_hh = np.linalg.norm(a.W_hh - b.W_hh) / n ** 2
    d_xh = np.linalg.norm(a.W_xh - b.W_xh) / n
    d_hy = np.linalg.norm(a.W_hy - b.W_hy) / n
    return float(max(d_hh, d_xh, d_hy))


def d_tau_curve(child_traj, ref_traj) -> list[tuple[float, float]]:
    """Running supremum ``[(t, D_t), ...]`` over a shared snapshot grid.

    Both arguments are sequences of ``(t, WeightSet)``; ``ref_traj`` must
    already be restricted to the child's index set.
    """
    child_traj, ref_traj = list(child_traj), list(ref_traj)
    if [t for t, _ in child_traj] != [t for t, _ in ref_traj]:
        raise PreconditionError("snapshot grids of child and reference do not align")
    out, sup = [], 0.0
    for (t, a), (_, b) in zip(child_traj, ref_traj):
        if a.n != b.n:
            raise PreconditionError(f"width mismatch {a.n} vs {b.n}")
        sup = max(sup, _block_distance(a, b))
        out.append((t, sup))
    return out


def d_tau(child_traj, ref_traj, tau: float) -> float:
    """Supremum over grid times ``t <= tau`` of the normalized block distance."""
    curve = d_tau_curve(child_traj, ref_traj)
    vals = [v for t, v in curve if t <= tau * (1 + 1e-12)]
    if not vals:
        raise PreconditionError(f"no snapshot at or before tau={tau}")
    return vals[-1]


def loss_gap(a: TrajectoryLog, b: TrajectoryLog) -> float:
    """``sup_step |loss_a - loss_b|`` over the common steps."""
    la, lb = a.column("loss"), b.column("loss")
    k = min(len(la), len(lb))
    return float(np.max(np.abs(la[:k] - lb[:k])))


def fit_power_law(ns, values):
    """Least squares of ``log values`` against ``log ns``; zero values are skipped.

    Returns ``(slope, intercept, r2)``; NaNs when fewer than two points remain.
    """
    ns, values = np.asarray(ns, float), np.asarray(values, float)
    keep = values > 0
    if keep.sum() < 2:
        return math.nan, math.nan, math.nan
    x, y = np.log(ns[keep]), np.log(values[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class CoupledRun:
    reference: TrajectoryLog
    children: dict
    dtau_curves: dict
    dtau_table: list
    loss_gaps: dict
    slope: float
    intercept: float
    r2: float
    N_ref: int
    failed: list = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.failed)

    def summary(self) -> dict:
        return {"widths": [row[0] for row in self.dtau_table], "N_ref": self.N_ref,
                "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "loss_gaps": {str(n): g for n, g in self.loss_gaps.items()},
                "partial": self.partial, "failed": self.failed}


def _train_child(args):
    n, w0, batch, cfg, out_dir = args
    try:
        return n, train(w0, batch, cfg, out_dir, keep_weights=True), None
    except MFRNNError as exc:
        return n, None, str(exc)


def rate_sweep(plan: CouplingPlan, data: SequenceBatch, cfg: TrainConfig, *, jobs: int = 1,
               out_dir=None, reference_log: TrajectoryLog | None = None) -> CoupledRun:
    """Train the reference and every child, then tabulate ``D_tau`` per width.

    ``tau`` is the final time ``cfg.steps * cfg.beta`` and the supremum runs
    over the snapshot grid of ``cfg``.  The slope fit ignores widths whose
    distance is exactly zero (``n == N_ref`` self-coupling).
    """
    if cfg.scaling != "meanfield":
        raise PreconditionError("rate_sweep requires meanfield scaling")
    out_dir = Path(out_dir) if out_dir is not None else None
    ref_log = reference_log or train(plan.reference, data, cfg,
                                     out_dir / "reference" if out_dir else None, keep_weights=True)
    tasks = [(n, plan.child(n), data, cfg, out_dir / f"n{n:04d}" if out_dir else None)
             for n in plan.widths]
    results = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for n, lg, err in pool.map(_train_child, tasks):
                results[n] = (lg, err)
    else:
        for task in tasks:
            n, lg, err = _train_child(task)
            results[n] = (lg, err)
    tau = cfg.steps * cfg.beta
    grid = sorted(ref_log.weights)
    children, curves, table, gaps, failed = {}, {}, [], {}, []
    for n in plan.widths:
        lg, err = results[n]
        if lg is None:
            log.error("child n=%d failed: %s", n, err)
            failed.append(n)
            continue
        idx = plan.index_sets[n]
        ref_traj = [(s * cfg.beta, gather(ref_log.weights[s], idx)) for s in grid]
        child_traj = [(s * cfg.beta, lg.weights[s]) for s in grid]
        curves[n] = d_tau_curve(child_traj, ref_traj)
        table.append((n, tau, curves[n][-1][1]))
        gaps[n] = loss_gap(lg, ref_log)
        children[n] = lg
    slope, intercept, r2 = fit_power_law([r[0] for r in table], [r[2] for r in table])
    return CoupledRun(ref_log, children, curves, table, gaps, slope, intercept, r2,
                      plan.reference.n, failed)
