"""Stationarity functionals comparing a snapshot with a late surrogate limit.

All integrals over products of the neuron measure become uniform averages
over index chains, evaluated by repeated matrix-vector products.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SequenceBatch
from .errors import ConfigError, PreconditionError
from .grad import gradient
from .model import WeightSet


def chain_quadratic(v, M, D, i: int) -> float:
    """Average over chains ``(j_0, ..., j_i)`` of ``v(j_0) M(j_0,j_1) ... M(j_{i-2},j_{i-1}) D(j_{i-1},j_i)``.

    Costs ``O(i n^2)``.
    """
    if i < 1:
        raise PreconditionError(f"chain length must be >= 1, got {i}")
    v = np.asarray(v, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    n = v.shape[0]
    u = v / n
    for _ in range(i - 1):
        u = (u @ M) / n
    return float(u @ D.sum(axis=1) / n)


@dataclass(frozen=True, eq=False)
class StationarityReport:
    t: float
    t_ref: float
    q1: float
    q2: float
    q3: np.ndarray
    q4: np.ndarray

    def row(self) -> list[float]:
        return [self.t, self.q1, self.q2, *self.q3.tolist(), *self.q4.tolist()]


def report(current: WeightSet, final_ref: WeightSet, batch: SequenceBatch) -> StationarityReport:
    """Evaluate the four functionals of ``current`` against ``final_ref``.

    q1: max_j |meanfield g_hy(j)| on ``batch``.
    q2: mean_j (W_hy_ref(j) - W_hy(j))^2.
    q3(i): chain average with node weight W_hy_ref^2, links W_hh_ref^2 and
        terminal (W_hh_ref - W_hh)^2.
    q4(i): as q3 but the terminal factor is the squared input-weight
        discrepancy of the last chain node.
    """
    if current.config != final_ref.config:
        raise ConfigError("current and reference snapshots have different configs")
    L = current.config.L
    g = gradient(current, batch, "meanfield")
    q1 = float(np.max(np.abs(g.g_hy)))
    q2 = float(np.mean((final_ref.W_hy - current.W_hy) ** 2))
    v = final_ref.W_hy ** 2
    M = final_ref.W_hh ** 2
    D_hh = (final_ref.W_hh - current.W_hh) ** 2
    dxh = np.sum((final_ref.W_xh - current.W_xh) ** 2, axis=1)
    D_xh = np.broadcast_to(dxh[:, None], M.shape)
    q3 = np.array([chain_quadratic(v, M, D_hh, i) for i in range(1, L + 1)])
    q4 = np.array([chain_quadratic(v, M, D_xh, i) for i in range(1, L + 1)])
    return StationarityReport(current.t, final_ref.t, q1, q2, q3, q4)


def report_ladder(snapshots, batch: SequenceBatch) -> list[StationarityReport]:
    """Reports for every snapshot against the last one (in time order)."""
    snaps = sorted(snapshots, key=lambda w: w.t)
    if not snaps:
        raise PreconditionError("no snapshots given")
    return [report(w, snaps[-1], batch) for w in snaps]


def report_header(L: int) -> list[str]:
    return (["t", "q1", "q2"] + [f"q3_{i}" for i in range(1, L + 1)]
            + [f"q4_{i}" for i in range(1, L + 1)])


def write_reports(reports, L: int, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(report_header(L))
        for r in reports:
            wr.writerow([repr(float(x)) for x in r.row()])
    return path
